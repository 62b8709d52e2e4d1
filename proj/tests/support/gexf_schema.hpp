#pragma once

// Checks a document against the element, attribute and datatype rules of the
// GEXF 1.2 schema (namespace http://www.gexf.net/1.2draft), plus id
// uniqueness and edge endpoint references.

#include <string>
#include <string_view>
#include <vector>

namespace archminer::testing {

std::vector<std::string> gexf_schema_violations(std::string_view xml);

}  // namespace archminer::testing
