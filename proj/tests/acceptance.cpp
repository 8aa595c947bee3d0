// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "ideaforge/backends.hpp"
#include "ideaforge/corpus.hpp"
#include "ideaforge/decoder.hpp"
#include "ideaforge/evaluator.hpp"
#include "ideaforge/json_io.hpp"
#include "ideaforge/prompting.hpp"
#include "ideaforge/reference_lm.hpp"
#include "ideaforge/session.hpp"
#include "mock_endpoint.hpp"
#include "test_support.hpp"

using namespace ideaforge;
using textkit::kBosId;
using textkit::kEosId;
using textkit::TokenId;
using Clock = std::chrono::steady_clock;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

const lm::TrainResult& mini() {
  static const auto r = [] {
    const auto records = corpus::parse_corpus_file(testing::data_dir() / "mini_corpus.jsonl");
    const auto blocks = lm::tokenize_training_text(corpus::format_training_file(records));
    const auto vocab = textkit::build_vocab(blocks);
    lm::TrainOptions opts;
    opts.order = 3;
    opts.passes = 5;
    return lm::train(vocab, lm::frame_sequences(vocab, blocks), opts);
  }();
  return r;
}

Outcome lm_normalization() {
  const auto& m = mini().model;
  const auto t0 = Clock::now();
  std::mt19937 rng(1);
  std::uniform_int_distribution<std::size_t> len(0, 6);
  std::uniform_int_distribution<TokenId> id(0, static_cast<TokenId>(m.vocab_size() - 1));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<TokenId> ctx(len(rng));
    for (auto& t : ctx) t = id(rng);
    double sum = 0.0;
    for (double l : m.next_token_logits(ctx)) sum += std::exp(l);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, "max |sum-1| = " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome analytic_unigram() {
  const auto vocab = textkit::Vocabulary::from_tokens({"<unk>", "<bos>", "<eos>", "a", "b"});
  lm::NGramCounts counts(1);
  counts.add(std::vector<TokenId>{3, 4, 3, 4});
  const lm::NGramModel m(vocab, counts, 1.0, 0.5);
  const double p = m.probability(std::vector<TokenId>{}, 3);
  const double err = std::abs(p - 1.0 / 3.0);
  return {err <= 1e-12, "P(a) = " + fmt(p, 17) + ", |err| = " + fmt(err)};
}

Outcome filter_soundness() {
  const std::vector<double> logits{2.0, 1.5, 0.3, -0.5, 1.0};
  const std::size_t k = 2;
  const double top_p = 0.7;

  // Brute force: rank ids, keep k, renormalize, keep the shortest prefix reaching p.
  std::vector<std::size_t> order{0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return logits[a] > logits[b]; });
  order.resize(k);
  double z = 0.0;
  for (auto i : order) z += std::exp(logits[i]);
  std::vector<double> expect(logits.size(), 0.0);
  double mass = 0.0;
  for (auto i : order) {
    expect[i] = std::exp(logits[i]) / z;
    mass += expect[i];
    if (mass >= top_p) break;
  }
  double kept = 0.0;
  for (double e : expect) kept += e;
  for (auto& e : expect) e /= kept;

  decoding::DecodingParams params;
  params.top_k = k;
  params.top_p = top_p;
  const std::vector<std::uint32_t> counts(logits.size(), 0);
  decoding::Rng rng(31337);
  const auto t0 = Clock::now();
  constexpr int kSteps = 100000;
  std::vector<double> freq(logits.size(), 0.0);
  int outside = 0;
  for (int i = 0; i < kSteps; ++i) {
    const auto id = decoding::sample_next(logits, counts, params, rng).id;
    if (expect[id] == 0.0) ++outside;
    freq[id] += 1.0 / kSteps;
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) l1 += std::abs(freq[i] - expect[i]);
  const double secs = seconds_since(t0);
  return {outside == 0 && l1 < 0.01 && secs < 30.0,
          "outside = " + std::to_string(outside) + ", L1 = " + fmt(l1) + ", " + fmt(secs, 3) + " s"};
}

Outcome penalty_formula() {
  const auto got = decoding::apply_penalties(std::vector<double>{0, 0}, std::vector<std::uint32_t>{2, 0}, 0.5, 0.5);
  bool ok = got == std::vector<double>{-1.5, 0.0};
  std::mt19937 rng(4);
  std::normal_distribution<double> g(0.0, 3.0);
  std::uniform_int_distribution<std::uint32_t> c(0, 9);
  int identity = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> l(16);
    std::vector<std::uint32_t> n(16);
    for (auto& x : l) x = g(rng);
    for (auto& x : n) x = c(rng);
    if (decoding::apply_penalties(l, n, 0.0, 0.0) == l) ++identity;
  }
  ok = ok && identity == 1000;
  return {ok, "example = [" + fmt(got[0]) + ", " + fmt(got[1]) + "], identity on " + std::to_string(identity) + "/1000"};
}

// Hides <eos> so every output runs to max_tokens.
class NoEos : public LogitSource {
 public:
  explicit NoEos(const LogitSource& inner) : inner_(inner) {}
  std::size_t vocab_size() const override { return inner_.vocab_size(); }
  std::vector<double> next_token_logits(std::span<const TokenId> ctx) const override {
    auto l = inner_.next_token_logits(ctx);
    l[kEosId] = -std::numeric_limits<double>::infinity();
    return l;
  }

 private:
  const LogitSource& inner_;
};

Outcome repetition_observable() {
  const auto t0 = Clock::now();
  // Twenty content tokens; the training stream cycles through the first four.
  std::vector<std::string> toks{"<unk>", "<bos>", "<eos>"};
  for (int i = 0; i < 20; ++i) toks.push_back("t" + std::to_string(i));
  const auto vocab = textkit::Vocabulary::from_tokens(toks);
  lm::NGramCounts counts(3);
  std::vector<TokenId> stream{kBosId};
  for (int i = 0; i < 400; ++i) stream.push_back(static_cast<TokenId>(3 + i % 4));
  counts.add(stream);
  const lm::NGramModel model(vocab, counts, 0.05, 0.9);
  const NoEos source(model);

  std::vector<double> means;
  for (double fp : {0.0, 0.5, 1.0}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      decoding::DecodingParams p;
      p.max_tokens = 200;
      p.frequency_penalty = fp;
      p.seed = seed;
      const auto r = decoding::generate(source, std::vector<TokenId>{kBosId}, p, vocab);
      std::vector<std::string> ids;
      for (auto id : r.token_ids) ids.push_back(std::to_string(id));
      if (ids.size() != 200) return {false, "output of " + std::to_string(ids.size()) + " tokens"};
      total += eval::distinct_n(ids, 2);
    }
    means.push_back(total / 50.0);
  }
  const double secs = seconds_since(t0);
  const bool ok = means[0] <= means[1] && means[1] <= means[2] && means[2] - means[0] >= 0.05 && secs < 60.0;
  return {ok, "distinct-2 = " + fmt(means[0], 4) + " / " + fmt(means[1], 4) + " / " + fmt(means[2], 4) + ", " +
                  fmt(secs, 3) + " s"};
}

std::vector<prompting::AnalogyExample> bank() {
  return prompting::load_example_bank(testing::data_dir() / "analogy_bank.jsonl");
}

Outcome prompt_goldens() {
  prompting::AnalogyPrompt a;
  a.examples = bank();
  a.query_source = "Lantern";
  a.query_target = "Drone";
  const auto lantern = prompting::build_analogy_prompt(a);
  a.query_source = "Origami";
  const auto origami = prompting::build_analogy_prompt(a);
  const bool golden_a = lantern == testing::read_file(testing::golden_dir() / "analogy_lantern_drone.txt");
  const bool golden_o = origami == testing::read_file(testing::golden_dir() / "analogy_origami_drone.txt");
  const auto cut = lantern.rfind('\n', lantern.size() - 2) + 1;
  const bool last_line_only =
      lantern.substr(0, cut) == origami.substr(0, cut) && lantern.substr(cut) != origami.substr(cut) &&
      origami.substr(cut).find('\n') == origami.size() - cut - 1;

  bool problems = true;
  const auto cases = json::parse(testing::read_file(testing::golden_dir() / "problem_inputs.json"));
  for (const auto& c : cases) {
    const prompting::ProblemPrompt p{c["category"], c["problem_statement"]};
    problems = problems && prompting::build_problem_prompt(p) ==
                               testing::read_file(testing::golden_dir() / c["golden"].get<std::string>());
  }
  const bool ok = golden_a && golden_o && last_line_only && problems && cases.size() == 2;
  return {ok, std::string("analogy goldens ") + (golden_a && golden_o ? "match" : "differ") + ", last-line diff " +
                  (last_line_only ? "only" : "broader") + ", problem goldens " + (problems ? "match" : "differ")};
}

Outcome remote_conformance() {
  ::setenv("IDEAFORGE_API_KEY", "acceptance-key", 1);
  testing::MockEndpoint ep;
  backends::BackendDescriptor d;
  d.kind = backends::BackendKind::remote;
  d.base_url = ep.base_url();
  d.model_name = "completion-model";
  std::vector<std::chrono::milliseconds> sleeps;
  backends::RemoteBackend client(d, {}, [&](std::chrono::milliseconds ms) { sleeps.push_back(ms); });

  backends::CompletionRequest req;
  req.prompt = "Applying lantern to drone:\n";
  req.params = decoding::preset("analogy");
  req.params.stop = {std::string(prompting::kAnalogyStop)};
  req.params.n_candidates = 2;
  client.complete(req);
  const auto body = json::parse(ep.seen().at(0).body);
  std::set<std::string> keys;
  for (const auto& [k, v] : body.items()) keys.insert(k);
  const std::set<std::string> want{"model", "prompt", "max_tokens", "temperature", "top_p",
                                   "presence_penalty", "frequency_penalty", "stop", "n"};
  const bool fields = keys == want && body["temperature"] == 0.85 && body["top_p"] == 1.0 &&
                      body["presence_penalty"] == 0.5 && body["frequency_penalty"] == 0.5;

  auto with_k = req;
  with_k.params = decoding::preset("problem-driven");
  const auto before = ep.hits();
  bool rejected = false;
  try {
    client.complete(with_k);
  } catch (const ValidationError&) {
    rejected = true;
  }
  const bool no_network = ep.hits() == before;

  ep.script({429, 429});
  const auto start = ep.hits();
  bool ok200 = true;
  try {
    client.complete(req);
  } catch (const std::exception&) {
    ok200 = false;
  }
  const auto attempts = ep.hits() - start;
  const bool ok = fields && rejected && no_network && ok200 && attempts == 3;
  return {ok, std::string("body fields ") + (fields ? "exact" : "wrong") + ", top_k " +
                  (rejected && no_network ? "rejected offline" : "not rejected") + ", 429/429/200 attempts = " +
                  std::to_string(attempts)};
}

Outcome evaluator_filter() {
  const auto b = bank();
  std::vector<std::string> refs;
  for (const auto& e : b) refs.push_back(e.description);
  eval::EvaluationContext ctx;
  ctx.references = refs;
  ctx.anchor = "drone";

  const std::vector<std::string> fresh{
      "A paper lantern drone folds flat for transport and opens into a glowing ribbed shell that hovers over "
      "night markets, casting soft light while its rotors stay hidden behind the translucent panels.",
      "Hover Beacon is a rescue drone whose body glows like a lantern so hikers can spot it through fog; the "
      "frame collapses into a cylinder that clips onto a backpack strap when it is not flying.",
      "Garden drones carry warm lantern light between flower beds at dusk, landing on stakes to recharge from "
      "small solar petals and lifting off again when visitors walk along the gravel paths."};

  std::vector<eval::ConceptCandidate> pool;
  auto add = [&](std::string id, const std::string& text) {
    eval::ConceptCandidate c;
    c.id = std::move(id);
    c.text = text;
    c.scores = eval::evaluate(text, ctx);
    pool.push_back(c);
  };
  add("copy", b[0].description);
  for (std::size_t i = 0; i < fresh.size(); ++i) add("new" + std::to_string(i), fresh[i]);
  const double copy_novelty = pool[0].scores->novelty;
  const auto kept = eval::rank_and_filter(pool);
  bool copy_removed = true;
  for (const auto& c : kept) copy_removed = copy_removed && c.id != "copy";
  const bool fresh_kept = kept.size() == 3;

  // Five hand-scored candidates, values exact in binary; c4 fails the
  // novelty gate, c2 and c5 tie.
  auto hand = [](std::string id, double nov, double rel) {
    eval::ConceptCandidate c;
    c.id = std::move(id);
    eval::EvaluationReport r;
    r.novelty = nov;
    r.relevance = rel;
    r.token_count = 50;
    r.length_ok = true;
    r.novelty_ok = nov >= 0.3;
    r.composite = r.novelty_ok ? 0.5 * nov + 0.5 * rel : 0.0;
    c.scores = r;
    return c;
  };
  const std::vector<eval::ConceptCandidate> five{hand("c1", 0.5, 0.0), hand("c2", 0.75, 0.25),
                                                 hand("c3", 1.0, 0.75), hand("c4", 0.25, 1.0), hand("c5", 0.5, 0.5)};
  // Composites: c1 0.25, c2 0.5, c3 0.875, c4 gated, c5 0.5.
  const std::vector<std::string> expected{"c3", "c2", "c5", "c1"};
  std::vector<std::string> got;
  for (const auto& c : eval::rank_and_filter(five)) got.push_back(c.id);

  const bool ok = copy_novelty <= 0.05 && copy_removed && fresh_kept && got == expected;
  std::string order;
  for (const auto& id : got) order += (order.empty() ? "" : ",") + id;
  return {ok, "copy novelty = " + fmt(copy_novelty, 4) + (copy_removed ? ", copy removed" : ", copy kept") +
                  ", kept " + std::to_string(kept.size()) + "/3 fresh, order " + order};
}

struct RunResult {
  bool ok = false;
  std::string detail;
  std::vector<std::string> exports;
};

RunResult end_to_end() {
  RunResult out;
  const auto t0 = Clock::now();
  // Same directory on every run: the model path is part of the session.
  const auto work_dir = std::filesystem::temp_directory_path() / "ideaforge-acceptance-run";
  std::filesystem::remove_all(work_dir);
  std::filesystem::create_directories(work_dir);
  struct Cleanup {
    std::filesystem::path dir;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
    }
    const std::filesystem::path& path() const { return dir; }
  } work{work_dir};

  const auto records = corpus::parse_corpus_file(testing::data_dir() / "mini_corpus.jsonl");
  const auto stats = corpus::corpus_stats(records);
  const auto blocks = lm::tokenize_training_text(corpus::format_training_file(records));
  const auto vocab = textkit::build_vocab(blocks);
  lm::TrainOptions opts;
  opts.order = 3;
  opts.passes = 5;
  const auto trained = lm::train(vocab, lm::frame_sequences(vocab, blocks), opts);
  bool decreasing = trained.trace.size() == 5;
  for (std::size_t i = 1; i < trained.trace.size(); ++i) {
    decreasing = decreasing && trained.trace[i].avg_nll < trained.trace[i - 1].avg_nll;
  }
  const auto model_path = work.path() / "mini.model";
  lm::save(trained.model, trained.trace, model_path);

  backends::BackendDescriptor local;
  local.model_path = model_path.string();
  service::BackendCache cache;
  cache.add(local, std::shared_ptr<backends::Backend>(backends::LocalBackend::open(local)));

  service::StoreOptions so;
  so.data_dir = work.path() / "store";
  so.clock = service::fixed_clock("2026-01-01T00:00:00.000Z");
  so.id_generator = service::sequential_ids("run");
  service::SessionStore store(cache.provider(), so);

  const auto cases = json::parse(testing::read_file(testing::golden_dir() / "problem_inputs.json"));
  auto pparams = decoding::preset("problem-driven");
  pparams.max_tokens = 80;
  pparams.seed = 2022;
  const auto ps = store.create_session(
      eval::Mode::problem_driven, prompting::ProblemPrompt{cases[0]["category"], cases[0]["problem_statement"]},
      pparams, local);

  prompting::AnalogyPrompt ap;
  ap.examples = bank();
  ap.query_source = "Lantern";
  ap.query_target = "Drone";
  auto aparams = decoding::preset("analogy");
  aparams.max_tokens = 80;
  aparams.seed = 2022;
  const auto as = store.create_session(eval::Mode::analogy, ap, aparams, local);

  std::size_t generated = 0, scored = 0;
  for (const auto& id : {ps.id, as.id}) {
    const auto made = store.generate_batch(id, 10);
    generated += made.size();
    for (const auto& c : made) scored += c.scores.has_value() ? 1 : 0;
    (void)eval::rank_and_filter(made);
  }
  const auto top = store.get(as.id).history;
  store.record_verdict(as.id, top.front().id, eval::Verdict::accepted);

  bool lossless = true;
  service::StoreOptions other = so;
  other.data_dir = work.path() / "imported";
  service::SessionStore importer(cache.provider(), other);
  for (const auto& id : {ps.id, as.id}) {
    const auto state = store.get(id);
    const auto doc = store.export_session(id);
    const auto back = importer.import_session(doc);
    lossless = lossless && back == state && importer.export_session(id) == doc;
    out.exports.push_back(doc);
  }

  service::SessionStore reloaded(cache.provider(), so);
  for (const auto& id : {ps.id, as.id}) lossless = lossless && reloaded.get(id) == store.get(id);

  const double secs = seconds_since(t0);
  out.ok = stats.records >= 150 && decreasing && generated == 20 && scored == 20 && lossless && secs < 60.0;
  std::string trace;
  for (const auto& t : trained.trace) trace += (trace.empty() ? "" : " > ") + fmt(t.avg_nll, 4);
  out.detail = std::to_string(stats.records) + " records, trace " + trace + ", " + std::to_string(generated) +
               " candidates, round trip " + (lossless ? "lossless" : "LOSSY") + ", " + fmt(secs, 3) + " s";
  return out;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << name << " (" << o.detail << ")\n";
    std::cout.flush();
    if (!o.pass) ++failures;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "LM normalization", guarded(lm_normalization));
  report(2, "analytic unigram probability", guarded(analytic_unigram));
  report(3, "top-k/top-p filter soundness", guarded(filter_soundness));
  report(4, "penalty formula", guarded(penalty_formula));
  report(5, "frequency penalty raises distinct-2", guarded(repetition_observable));
  report(6, "prompt golden files", guarded(prompt_goldens));
  report(7, "remote client conformance", guarded(remote_conformance));
  report(8, "evaluator filter", guarded(evaluator_filter));

  RunResult first, second;
  report(9, "end-to-end desk-scale run", guarded([&] {
           first = end_to_end();
           return Outcome{first.ok, first.detail};
         }));
  report(10, "replay determinism", guarded([&] {
           second = end_to_end();
           const bool same = !first.exports.empty() && first.exports == second.exports;
           std::size_t bytes = 0;
           for (const auto& e : second.exports) bytes += e.size();
           return Outcome{same, std::string(same ? "exports byte-identical" : "exports differ") + " (" +
                                    std::to_string(bytes) + " bytes)"};
         }));

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}
