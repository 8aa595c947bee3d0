#include "ideaforge/reference_lm.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ideaforge/error.hpp"
#include "json.hpp"

namespace ideaforge::lm {

NGramCounts::NGramCounts(std::size_t order) {
  if (order < 1 || order > kMaxOrder) {
    throw ValidationError("n-gram order must be in [1, " + std::to_string(kMaxOrder) + "], got " + std::to_string(order));
  }
  levels_.resize(order);
}

void NGramCounts::add(std::span<const TokenId> sequence) {
  const std::size_t first = (!sequence.empty() && sequence.front() == textkit::kBosId) ? 1 : 0;
  for (std::size_t i = first; i < sequence.size(); ++i) {
    const TokenId target = sequence[i];
    for (std::size_t k = 1; k <= order() && k - 1 <= i; ++k) {
      std::vector<TokenId> ctx(sequence.begin() + static_cast<std::ptrdiff_t>(i - (k - 1)),
                               sequence.begin() + static_cast<std::ptrdiff_t>(i));
      auto& stats = levels_[k - 1][std::move(ctx)];
      ++stats.total;
      ++stats.next[target];
    }
  }
}

const ContextStats* NGramCounts::find(std::span<const TokenId> context) const {
  if (context.size() >= order()) return nullptr;
  const auto& lvl = levels_[context.size()];
  auto it = lvl.find(std::vector<TokenId>(context.begin(), context.end()));
  return it == lvl.end() ? nullptr : &it->second;
}

std::uint64_t NGramCounts::count(std::span<const TokenId> context, TokenId next) const {
  const auto* stats = find(context);
  if (!stats) return 0;
  auto it = stats->next.find(next);
  return it == stats->next.end() ? 0 : it->second;
}

std::uint64_t NGramCounts::context_total(std::span<const TokenId> context) const {
  const auto* stats = find(context);
  return stats ? stats->total : 0;
}

NGramModel::NGramModel(textkit::Vocabulary vocab, NGramCounts counts, double alpha, double lambda)
    : vocab_(std::move(vocab)), counts_(std::move(counts)), alpha_(alpha), lambda_(lambda) {
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw ValidationError("alpha must be a finite value > 0");
  if (!(lambda_ > 0.0 && lambda_ < 1.0)) throw ValidationError("lambda must lie in (0, 1)");
  for (std::size_t k = 1; k <= counts_.order(); ++k) {
    for (const auto& [ctx, stats] : counts_.level(k)) {
      check_ids(ctx);
      for (const auto& [tok, n] : stats.next) {
        if (tok >= vocab_.size()) throw ValidationError("count table references token id " + std::to_string(tok));
      }
    }
  }
}

void NGramModel::check_ids(std::span<const TokenId> ids) const {
  for (TokenId id : ids) {
    if (id >= vocab_.size()) {
      throw ValidationError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(vocab_.size()));
    }
  }
}

std::span<const TokenId> NGramModel::history(std::span<const TokenId> context) const {
  const std::size_t len = std::min(context.size(), order() - 1);
  return context.subspan(context.size() - len);
}

std::vector<double> NGramModel::next_token_probabilities(std::span<const TokenId> context) const {
  check_ids(context);
  const auto h = history(context);
  const std::size_t V = vocab_.size();
  const double smooth = alpha_ * static_cast<double>(V);

  std::vector<double> p(V, 0.0);
  {
    const auto* uni = counts_.find({});
    const double denom = static_cast<double>(uni ? uni->total : 0) + smooth;
    for (std::size_t j = 0; j < V; ++j) p[j] = alpha_ / denom;
    if (uni) {
      for (const auto& [tok, n] : uni->next) p[tok] += static_cast<double>(n) / denom;
    }
  }
  for (std::size_t len = 1; len <= h.size(); ++len) {
    const auto* stats = counts_.find(h.subspan(h.size() - len));
    const double denom = static_cast<double>(stats ? stats->total : 0) + smooth;
    const double base = lambda_ * alpha_ / denom;
    for (std::size_t j = 0; j < V; ++j) p[j] = base + (1.0 - lambda_) * p[j];
    if (stats) {
      for (const auto& [tok, n] : stats->next) p[tok] += lambda_ * static_cast<double>(n) / denom;
    }
  }
  return p;
}

std::vector<double> NGramModel::next_token_logits(std::span<const TokenId> context) const {
  auto p = next_token_probabilities(context);
  for (double& x : p) x = std::log(x);
  return p;
}

double NGramModel::probability(std::span<const TokenId> context, TokenId next) const {
  check_ids(context);
  check_ids(std::span<const TokenId>(&next, 1));
  const auto h = history(context);
  const double smooth = alpha_ * static_cast<double>(vocab_.size());

  auto level_term = [&](std::span<const TokenId> ctx) {
    const auto* stats = counts_.find(ctx);
    double c = 0.0;
    double total = 0.0;
    if (stats) {
      total = static_cast<double>(stats->total);
      if (auto it = stats->next.find(next); it != stats->next.end()) c = static_cast<double>(it->second);
    }
    return (c + alpha_) / (total + smooth);
  };

  double p = level_term({});
  for (std::size_t len = 1; len <= h.size(); ++len) {
    p = lambda_ * level_term(h.subspan(h.size() - len)) + (1.0 - lambda_) * p;
  }
  return p;
}

double average_nll(const NGramModel& model, std::span<const std::vector<TokenId>> sequences) {
  double nll = 0.0;
  std::size_t n = 0;
  for (const auto& seq : sequences) {
    const std::size_t first = (!seq.empty() && seq.front() == textkit::kBosId) ? 1 : 0;
    for (std::size_t i = first; i < seq.size(); ++i) {
      const std::span<const TokenId> ctx(seq.data(), i);
      nll -= std::log(model.probability(ctx, seq[i]));
      ++n;
    }
  }
  if (n == 0) throw ValidationError("no tokens to evaluate");
  return nll / static_cast<double>(n);
}

double perplexity(const NGramModel& model, std::span<const std::vector<TokenId>> sequences) {
  return std::exp(average_nll(model, sequences));
}

TrainResult train(const textkit::Vocabulary& vocab, std::span<const std::vector<TokenId>> sequences,
                  const TrainOptions& options) {
  if (sequences.empty()) throw ValidationError("training set is empty");
  if (options.passes < 1) throw ValidationError("passes must be >= 1");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    if (seq.size() < 2 || seq.front() != textkit::kBosId || seq.back() != textkit::kEosId) {
      throw ValidationError("training sequence " + std::to_string(i) + " must begin with <bos> and end with <eos>");
    }
    for (TokenId id : seq) {
      if (id >= vocab.size()) throw ValidationError("training sequence " + std::to_string(i) + " has invalid id " + std::to_string(id));
    }
  }

  NGramCounts counts(options.order);
  TrainingTrace trace;
  std::size_t consumed = 0;
  const std::size_t N = sequences.size();
  for (std::size_t pass = 1; pass <= options.passes; ++pass) {
    const std::size_t shard_end = std::max<std::size_t>(1, pass * N / options.passes);
    for (; consumed < shard_end; ++consumed) counts.add(sequences[consumed]);
    NGramModel snapshot(vocab, counts, options.alpha, options.lambda);
    trace.push_back({pass, average_nll(snapshot, sequences)});
  }
  return {NGramModel(vocab, std::move(counts), options.alpha, options.lambda), std::move(trace)};
}

// Binary codec. Friend of NGramCounts so it can rebuild tables without
// replaying sequences.
class ModelCodec {
 public:
  static std::string write(const NGramModel& model, const TrainingTrace& trace) {
    std::string out;
    out += "IFNG";
    u32(out, kVersion);
    u32(out, static_cast<std::uint32_t>(model.order()));
    f64(out, model.alpha());
    f64(out, model.lambda());
    const auto& tokens = model.vocab().tokens();
    u32(out, static_cast<std::uint32_t>(tokens.size()));
    for (const auto& t : tokens) {
      u32(out, static_cast<std::uint32_t>(t.size()));
      out += t;
    }
    for (std::size_t k = 1; k <= model.order(); ++k) {
      const auto& lvl = model.counts().level(k);
      u64(out, lvl.size());
      for (const auto& [ctx, stats] : lvl) {
        for (TokenId id : ctx) u32(out, id);
        u64(out, stats.total);
        u32(out, static_cast<std::uint32_t>(stats.next.size()));
        for (const auto& [tok, n] : stats.next) {
          u32(out, tok);
          u64(out, n);
        }
      }
    }
    u32(out, static_cast<std::uint32_t>(trace.size()));
    for (const auto& tp : trace) {
      u32(out, static_cast<std::uint32_t>(tp.pass));
      f64(out, tp.avg_nll);
    }
    return out;
  }

  static ModelFile read(std::string_view bytes) {
    Reader r{bytes};
    if (r.take(4) != "IFNG") throw ParseError(0, "not an ideaforge n-gram model (bad magic)");
    if (const auto v = r.u32(); v != kVersion) throw ParseError(0, "unsupported model version " + std::to_string(v));
    const std::size_t order = r.u32();
    const double alpha = r.f64();
    const double lambda = r.f64();

    std::vector<std::string> tokens(r.u32());
    for (auto& t : tokens) t = std::string(r.take(r.u32()));
    auto vocab = textkit::Vocabulary::from_tokens(std::move(tokens));

    NGramCounts counts(order);
    for (std::size_t k = 1; k <= order; ++k) {
      auto& lvl = counts.levels_[k - 1];
      const std::uint64_t n_ctx = r.u64();
      for (std::uint64_t c = 0; c < n_ctx; ++c) {
        std::vector<TokenId> ctx(k - 1);
        for (auto& id : ctx) id = r.u32();
        ContextStats stats;
        stats.total = r.u64();
        const std::uint32_t n_next = r.u32();
        std::uint64_t sum = 0;
        for (std::uint32_t i = 0; i < n_next; ++i) {
          const TokenId tok = r.u32();
          const std::uint64_t n = r.u64();
          if (n == 0) throw ParseError(0, "zero count stored in model");
          stats.next[tok] = n;
          sum += n;
        }
        if (sum != stats.total) throw ParseError(0, "context total does not match its counts");
        lvl.emplace(std::move(ctx), std::move(stats));
      }
    }

    TrainingTrace trace(r.u32());
    for (auto& tp : trace) {
      tp.pass = r.u32();
      tp.avg_nll = r.f64();
    }
    if (!r.rest.empty()) throw ParseError(0, "trailing bytes after model data");
    return {NGramModel(std::move(vocab), std::move(counts), alpha, lambda), std::move(trace)};
  }

 private:
  static constexpr std::uint32_t kVersion = 1;

  static void u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void f64(std::string& out, double v) { u64(out, std::bit_cast<std::uint64_t>(v)); }

  struct Reader {
    std::string_view rest;

    std::string_view take(std::size_t n) {
      if (rest.size() < n) throw ParseError(0, "model file is truncated");
      auto s = rest.substr(0, n);
      rest.remove_prefix(n);
      return s;
    }
    std::uint64_t le(std::size_t n) {
      auto s = take(n);
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
      return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(u64()); }
  };
};

std::string serialize_model(const NGramModel& model, const TrainingTrace& trace) {
  return ModelCodec::write(model, trace);
}

ModelFile deserialize_model(std::string_view bytes) { return ModelCodec::read(bytes); }

void save(const NGramModel& model, const TrainingTrace& trace, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model, trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path.string());
}

ModelFile load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_model(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

std::string debug_dump(const NGramModel& model, const TrainingTrace& trace) {
  nlohmann::ordered_json j;
  j["format"] = "ideaforge-ngram-debug";
  j["order"] = model.order();
  j["alpha"] = model.alpha();
  j["lambda"] = model.lambda();
  j["vocab"] = model.vocab().tokens();
  auto levels = nlohmann::ordered_json::array();
  for (std::size_t k = 1; k <= model.order(); ++k) {
    auto lvl = nlohmann::ordered_json::array();
    for (const auto& [ctx, stats] : model.counts().level(k)) {
      nlohmann::ordered_json e;
      e["context"] = ctx;
      e["total"] = stats.total;
      auto next = nlohmann::ordered_json::array();
      for (const auto& [tok, n] : stats.next) next.push_back({tok, n});
      e["next"] = std::move(next);
      lvl.push_back(std::move(e));
    }
    levels.push_back(std::move(lvl));
  }
  j["levels"] = std::move(levels);
  auto tr = nlohmann::ordered_json::array();
  for (const auto& tp : trace) tr.push_back({{"pass", tp.pass}, {"avg_nll", tp.avg_nll}});
  j["trace"] = std::move(tr);
  return j.dump(2);
}

std::vector<std::vector<std::string>> tokenize_training_text(std::string_view text,
                                                             const corpus::Delimiters& delims) {
  std::vector<std::vector<std::string>> out;
  for (const auto& block : corpus::split_training_blocks(text, delims)) {
    auto tokens = textkit::tokenize(corpus::strip_delimiters(block, delims));
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

std::vector<std::vector<TokenId>> frame_sequences(const textkit::Vocabulary& vocab,
                                                  std::span<const std::vector<std::string>> blocks) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(blocks.size());
  for (const auto& block : blocks) {
    std::vector<TokenId> seq{textkit::kBosId};
    const auto ids = textkit::encode(vocab, block);
    seq.insert(seq.end(), ids.begin(), ids.end());
    seq.push_back(textkit::kEosId);
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace ideaforge::lm
