#pragma once

#include <string_view>

namespace archminer {

// Shipped data files compiled into the library: "stopwords", "nouns",
// "seeds", "literature_baseline". Unknown names yield an empty view.
std::string_view embedded_data(std::string_view name);

}  // namespace archminer
