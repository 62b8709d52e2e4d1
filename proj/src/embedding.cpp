#include "archminer/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "archminer/error.hpp"
#include "archminer/fingerprint.hpp"
#include "archminer/random.hpp"

namespace archminer {
namespace {

constexpr char kMagic[8] = {'A', 'M', 'V', 'E', 'C', '0', '0', '1'};

std::string format_float(float f) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, f);
  return std::string(buf, r.ptr);
}

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw Error(ErrorKind::malformed_input, "vector file truncated");
  return value;
}

nlohmann::json config_json(const EmbeddingConfig& c) {
  return {{"dim", c.dim},
          {"window", c.window},
          {"negative_samples", c.negative_samples},
          {"epochs", c.epochs},
          {"min_count", c.min_count},
          {"initial_learning_rate", c.initial_learning_rate},
          {"subsample", c.subsample},
          {"seed", c.seed},
          {"threads", c.threads}};
}

EmbeddingConfig config_from_json(const nlohmann::json& j) {
  EmbeddingConfig c;
  c.dim = j.at("dim");
  c.window = j.at("window");
  c.negative_samples = j.at("negative_samples");
  c.epochs = j.at("epochs");
  c.min_count = j.at("min_count");
  c.initial_learning_rate = j.at("initial_learning_rate");
  c.subsample = j.at("subsample");
  c.seed = j.at("seed");
  c.threads = j.at("threads");
  return c;
}

// Plain access in the single-worker mode; relaxed atomics when several
// workers share the weight arrays.
template <bool Shared>
struct Cell {
  static float load(float& x) {
    if constexpr (Shared) return std::atomic_ref<float>(x).load(std::memory_order_relaxed);
    return x;
  }
  static void add(float& x, float delta) {
    if constexpr (Shared) {
      std::atomic_ref<float> r(x);
      r.store(r.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
    } else {
      x += delta;
    }
  }
};

struct Trainer {
  const EmbeddingConfig& config;
  std::vector<std::vector<std::uint32_t>> sentences;
  std::vector<double> keep_probability;  // per vocab entry
  std::vector<double> noise_cdf;
  std::vector<float> input;   // the word vectors
  std::vector<float> output;  // negative-sampling weights
  std::uint64_t total_words = 0;
  std::atomic<std::uint64_t> processed{0};

  std::uint32_t draw_noise(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u);
    return static_cast<std::uint32_t>(std::min<std::size_t>(it - noise_cdf.begin(), noise_cdf.size() - 1));
  }

  double learning_rate() const {
    const double progress =
        static_cast<double>(processed.load(std::memory_order_relaxed)) / (static_cast<double>(total_words) + 1.0);
    return config.initial_learning_rate * std::max(1.0 - progress, 1e-4);
  }

  template <bool Shared>
  void train_sentence(const std::vector<std::uint32_t>& raw, Rng& rng, std::vector<float>& gradient,
                      std::vector<std::uint32_t>& words) {
    using C = Cell<Shared>;
    const std::size_t dim = config.dim;
    words.clear();
    for (auto w : raw)
      if (keep_probability[w] >= 1.0 || rng.uniform() < keep_probability[w]) words.push_back(w);
    const double alpha = learning_rate();
    processed.fetch_add(raw.size(), std::memory_order_relaxed);
    const auto n = static_cast<std::ptrdiff_t>(words.size());
    for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
      const auto reduced = static_cast<std::ptrdiff_t>(rng.below(config.window));
      const auto span = static_cast<std::ptrdiff_t>(config.window) - reduced;
      for (std::ptrdiff_t c = pos - span; c <= pos + span; ++c) {
        if (c == pos || c < 0 || c >= n) continue;
        float* in = &input[static_cast<std::size_t>(words[c]) * dim];
        std::fill(gradient.begin(), gradient.end(), 0.0f);
        for (std::uint32_t d = 0; d <= config.negative_samples; ++d) {
          std::uint32_t target;
          float label;
          if (d == 0) {
            target = words[pos];
            label = 1.0f;
          } else {
            target = draw_noise(rng);
            if (target == words[pos]) continue;
            label = 0.0f;
          }
          float* out = &output[static_cast<std::size_t>(target) * dim];
          double dot = 0.0;
          for (std::size_t i = 0; i < dim; ++i) dot += C::load(in[i]) * C::load(out[i]);
          const double sigma = dot > 30 ? 1.0 : dot < -30 ? 0.0 : 1.0 / (1.0 + std::exp(-dot));
          const auto g = static_cast<float>((label - sigma) * alpha);
          for (std::size_t i = 0; i < dim; ++i) {
            gradient[i] += g * C::load(out[i]);
            C::add(out[i], g * C::load(in[i]));
          }
        }
        for (std::size_t i = 0; i < dim; ++i) C::add(in[i], gradient[i]);
      }
    }
  }

  template <bool Shared>
  void run_worker(std::size_t worker, std::size_t workers) {
    std::vector<float> gradient(config.dim);
    std::vector<std::uint32_t> words;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
      Rng rng(mix_seed(config.seed, (static_cast<std::uint64_t>(epoch) << 20) + worker + 1));
      for (std::size_t s = worker; s < sentences.size(); s += workers)
        train_sentence<Shared>(sentences[s], rng, gradient, words);
    }
  }
};

}  // namespace

void EmbeddingConfig::validate() const {
  if (dim == 0 || window == 0 || negative_samples == 0 || epochs == 0 || min_count == 0 || threads == 0)
    throw Error(ErrorKind::invalid_argument, "embedding dim, window, negative_samples, epochs, min_count and threads must be positive");
  if (!(initial_learning_rate > 0) || !std::isfinite(initial_learning_rate))
    throw Error(ErrorKind::invalid_argument, "embedding learning rate must be positive");
  if (subsample < 0) throw Error(ErrorKind::invalid_argument, "subsample threshold must be non-negative");
}

std::string corpus_fingerprint(std::span<const TokenizedDoc> docs) {
  Fingerprint fp;
  fp.update_u64(docs.size());
  for (const auto& doc : docs) {
    fp.update_u64(doc.post_id);
    fp.update_u64(doc.tokens.size());
    for (const auto& t : doc.tokens) fp.update_field(t);
  }
  return fp.hex();
}

EmbeddingModel train_skipgram(std::span<const TokenizedDoc> docs, const EmbeddingConfig& config) {
  config.validate();
  if (docs.empty()) throw Error(ErrorKind::empty_corpus, "no documents to train word vectors on");

  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs)
    for (const auto& t : doc.tokens) ++counts[t];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [term, count] : counts)
    if (count >= config.min_count) kept.emplace_back(term, count);
  if (kept.empty())
    throw Error(ErrorKind::empty_vocabulary, "no term occurs at least " + std::to_string(config.min_count) + " times");
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  EmbeddingModel model;
  model.dim_ = config.dim;
  model.config_ = config;
  model.corpus_fingerprint_ = corpus_fingerprint(docs);
  for (const auto& [term, count] : kept) model.terms_.push_back(term);
  model.rebuild_index();

  Trainer trainer{config, {}, {}, {}, {}, {}, 0, {}};
  std::uint64_t corpus_words = 0;
  for (const auto& [term, count] : kept) corpus_words += count;
  for (const auto& doc : docs) {
    std::vector<std::uint32_t> sentence;
    for (const auto& t : doc.tokens) {
      const auto it = model.index_.find(t);
      if (it != model.index_.end()) sentence.push_back(static_cast<std::uint32_t>(it->second));
    }
    if (sentence.size() > 1) trainer.sentences.push_back(std::move(sentence));
  }
  for (const auto& s : trainer.sentences) trainer.total_words += s.size();
  trainer.total_words *= config.epochs;

  const std::size_t vocab = kept.size();
  trainer.keep_probability.assign(vocab, 1.0);
  if (config.subsample > 0) {
    const double threshold = config.subsample * static_cast<double>(corpus_words);
    for (std::size_t i = 0; i < vocab; ++i) {
      const auto f = static_cast<double>(kept[i].second);
      trainer.keep_probability[i] = (std::sqrt(f / threshold) + 1.0) * threshold / f;
    }
  }
  double mass = 0.0;
  for (const auto& [term, count] : kept) mass += std::pow(static_cast<double>(count), 0.75);
  double running = 0.0;
  for (const auto& [term, count] : kept) {
    running += std::pow(static_cast<double>(count), 0.75);
    trainer.noise_cdf.push_back(running / mass);
  }

  Rng init(mix_seed(config.seed, 0));
  trainer.input.resize(vocab * config.dim);
  for (auto& x : trainer.input) x = static_cast<float>((init.uniform() - 0.5) / config.dim);
  trainer.output.assign(vocab * config.dim, 0.0f);

  if (config.threads == 1) {
    trainer.run_worker<false>(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < config.threads; ++w)
      workers.emplace_back([&trainer, w, n = config.threads] { trainer.run_worker<true>(w, n); });
  }

  for (float x : trainer.input)
    if (!std::isfinite(x)) throw Error(ErrorKind::non_finite_loss, "word vector training diverged");
  model.vectors_ = std::move(trainer.input);
  return model;
}

EmbeddingModel EmbeddingModel::from_vectors(std::vector<std::string> terms, const std::vector<std::vector<float>>& vectors) {
  if (terms.size() != vectors.size()) throw Error(ErrorKind::length_mismatch, "one vector per term required");
  EmbeddingModel model;
  model.dim_ = vectors.empty() ? 0 : static_cast<std::uint32_t>(vectors.front().size());
  for (const auto& v : vectors) {
    if (v.size() != model.dim_ || v.empty()) throw Error(ErrorKind::invalid_argument, "vectors must share a non-zero dimension");
    model.vectors_.insert(model.vectors_.end(), v.begin(), v.end());
  }
  model.terms_ = std::move(terms);
  model.rebuild_index();
  model.config_.dim = model.dim_ == 0 ? model.config_.dim : model.dim_;
  return model;
}

void EmbeddingModel::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (!index_.emplace(terms_[i], i).second) throw Error(ErrorKind::invalid_argument, "duplicate term " + terms_[i]);
}

std::size_t EmbeddingModel::index_of(const std::string& term) const {
  const auto it = index_.find(term);
  if (it == index_.end()) throw Error(ErrorKind::unknown_term, "term \"" + term + "\" is not in the vocabulary");
  return it->second;
}

std::span<const float> EmbeddingModel::vector(std::size_t index) const {
  if (index >= terms_.size()) throw Error(ErrorKind::unknown_term, "vector index out of range");
  return {vectors_.data() + index * dim_, dim_};
}

double EmbeddingModel::norm(std::size_t index) const {
  double sum = 0.0;
  for (float x : vector(index)) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

double EmbeddingModel::similarity(std::size_t a, std::size_t b) const {
  const auto va = vector(a);
  const auto vb = vector(b);
  double dot = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) dot += static_cast<double>(va[i]) * vb[i];
  const double denom = norm(a) * norm(b);
  if (denom == 0.0) return 0.0;
  return std::clamp(dot / denom, -1.0, 1.0);
}

double EmbeddingModel::similarity(const std::string& a, const std::string& b) const {
  return similarity(index_of(a), index_of(b));
}

std::vector<std::pair<std::string, double>> EmbeddingModel::nearest(const std::string& term, std::size_t k) const {
  const auto q = index_of(term);
  if (k == 0) throw Error(ErrorKind::invalid_argument, "nearest needs k >= 1");
  std::vector<std::pair<std::string, double>> all;
  all.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (i != q) all.emplace_back(terms_[i], similarity(q, i));
  const auto cmp = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
  const auto take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), cmp);
  all.resize(take);
  return all;
}

void EmbeddingModel::scale_vector(const std::string& term, float factor) {
  const auto i = index_of(term);
  for (std::size_t d = 0; d < dim_; ++d) vectors_[i * dim_ + d] *= factor;
}

std::string EmbeddingModel::fingerprint() const {
  Fingerprint fp;
  fp.update_u64(dim_).update_u64(terms_.size());
  for (const auto& t : terms_) fp.update_field(t);
  fp.update(std::string_view(reinterpret_cast<const char*>(vectors_.data()), vectors_.size() * sizeof(float)));
  return fp.hex();
}

void EmbeddingModel::write_binary(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, dim_);
  put<std::uint64_t>(out, terms_.size());
  const auto meta = nlohmann::json{{"config", config_json(config_)}, {"corpus_fingerprint", corpus_fingerprint_}}.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  for (const auto& t : terms_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  out.write(reinterpret_cast<const char*>(vectors_.data()), static_cast<std::streamsize>(vectors_.size() * sizeof(float)));
}

EmbeddingModel EmbeddingModel::read_binary(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(ErrorKind::malformed_input, "not an archminer vector file");
  EmbeddingModel model;
  model.dim_ = get<std::uint32_t>(in);
  const auto count = get<std::uint64_t>(in);
  std::string meta(get<std::uint32_t>(in), '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta.size()));
  try {
    const auto j = nlohmann::json::parse(meta);
    model.config_ = config_from_json(j.at("config"));
    model.corpus_fingerprint_ = j.at("corpus_fingerprint");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("vector file metadata: ") + e.what());
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string t(get<std::uint32_t>(in), '\0');
    in.read(t.data(), static_cast<std::streamsize>(t.size()));
    model.terms_.push_back(std::move(t));
  }
  model.vectors_.resize(count * model.dim_);
  in.read(reinterpret_cast<char*>(model.vectors_.data()), static_cast<std::streamsize>(model.vectors_.size() * sizeof(float)));
  if (!in) throw Error(ErrorKind::malformed_input, "vector file truncated");
  model.rebuild_index();
  return model;
}

void EmbeddingModel::write_text(std::ostream& out) const {
  out << terms_.size() << ' ' << dim_ << '\n';
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    out << terms_[i];
    for (float x : vector(i)) out << ' ' << format_float(x);
    out << '\n';
  }
}

EmbeddingModel EmbeddingModel::read_text(std::istream& in) {
  std::size_t count = 0;
  std::uint32_t dim = 0;
  if (!(in >> count >> dim) || dim == 0) throw Error(ErrorKind::malformed_input, "vector text header must be \"<count> <dim>\"");
  EmbeddingModel model;
  model.dim_ = dim;
  model.config_.dim = dim;
  std::string field;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> field)) throw Error(ErrorKind::malformed_input, "vector text truncated at term " + std::to_string(i));
    model.terms_.push_back(field);
    for (std::uint32_t d = 0; d < dim; ++d) {
      float x = 0;
      if (!(in >> field)) throw Error(ErrorKind::malformed_input, "vector text truncated");
      const auto r = std::from_chars(field.data(), field.data() + field.size(), x);
      if (r.ec != std::errc{} || r.ptr != field.data() + field.size())
        throw Error(ErrorKind::malformed_input, "bad vector component \"" + field + "\"");
      model.vectors_.push_back(x);
    }
  }
  model.rebuild_index();
  return model;
}

}  // namespace archminer
