// ideaforge command-line front end.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "ideaforge/backends.hpp"
#include "ideaforge/config.hpp"
#include "ideaforge/corpus.hpp"
#include "ideaforge/error.hpp"
#include "ideaforge/evaluator.hpp"
#include "ideaforge/http_api.hpp"
#include "ideaforge/json_io.hpp"
#include "ideaforge/prompting.hpp"
#include "ideaforge/reference_lm.hpp"
#include "ideaforge/session.hpp"

using namespace ideaforge;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

// Flags named after the DecodingParams fields; unset flags keep config values.
struct DecodingFlags {
  std::optional<std::size_t> max_tokens;
  std::optional<double> temperature;
  std::optional<std::size_t> top_k;
  std::optional<double> top_p;
  std::optional<double> presence_penalty;
  std::optional<double> frequency_penalty;
  std::vector<std::string> stop;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::string preset;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "Sampling preset: problem-driven or analogy");
    app->add_option("--max-tokens", max_tokens, "Maximum tokens per candidate");
    app->add_option("--temperature", temperature, "Sampling temperature (< 0.01 is greedy)");
    app->add_option("--top-k", top_k, "Keep the k most likely tokens (0 disables; local only)");
    app->add_option("--top-p", top_p, "Nucleus mass in (0, 1]");
    app->add_option("--presence-penalty", presence_penalty, "Flat penalty on tokens already seen");
    app->add_option("--frequency-penalty", frequency_penalty, "Per-occurrence penalty on tokens already seen");
    app->add_option("--stop", stop, "Stop string (repeatable, up to 4)");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--n", n, "Number of candidates");
  }

  decoding::DecodingParams apply(decoding::DecodingParams p) const {
    if (!preset.empty()) {
      // Presets set the sampling knobs only; length, stops and seed stay.
      const auto q = decoding::preset(preset);
      p.temperature = q.temperature;
      p.top_k = q.top_k;
      p.top_p = q.top_p;
      p.presence_penalty = q.presence_penalty;
      p.frequency_penalty = q.frequency_penalty;
    }
    if (max_tokens) p.max_tokens = *max_tokens;
    if (temperature) p.temperature = *temperature;
    if (top_k) p.top_k = *top_k;
    if (top_p) p.top_p = *top_p;
    if (presence_penalty) p.presence_penalty = *presence_penalty;
    if (frequency_penalty) p.frequency_penalty = *frequency_penalty;
    if (!stop.empty()) p.stop = stop;
    if (seed) p.seed = *seed;
    if (n) p.n_candidates = *n;
    return p;
  }
};

struct BackendFlags {
  std::string model;
  std::string remote_base;
  std::string remote_model;
  bool drop_top_k = false;

  void attach(CLI::App* app) {
    app->add_option("--model", model, "Local reference model file");
    app->add_option("--remote-base", remote_base, "Base URL of a completion endpoint");
    app->add_option("--remote-model", remote_model, "Model name sent to the endpoint");
    app->add_flag("--drop-top-k", drop_top_k, "Omit top_k for remote endpoints instead of failing");
  }

  void apply(config::ServiceConfig& cfg) const {
    if (!model.empty()) cfg.model = model;
    if (!remote_base.empty()) {
      cfg.remote.base_url = remote_base;
      if (model.empty()) cfg.model.clear();
    }
    if (!remote_model.empty()) cfg.remote.model_name = remote_model;
    if (drop_top_k) cfg.remote.drop_top_k = true;
  }
};

std::vector<std::string> corpus_descriptions(const std::string& path) {
  std::vector<std::string> out;
  if (path.empty()) return out;
  for (const auto& r : corpus::parse_corpus_file(path)) out.push_back(r.description);
  return out;
}

config::ServiceConfig load_cfg(const std::string& path) {
  return path.empty() ? config::ServiceConfig{} : config::load_config(path);
}

std::vector<std::vector<std::string>> load_blocks(const std::string& path, const corpus::Delimiters& delims) {
  // A .jsonl corpus is formatted on the fly; anything else is training text.
  if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") {
    const auto records = corpus::parse_corpus_file(path);
    return lm::tokenize_training_text(corpus::format_training_file(records, delims), delims);
  }
  return lm::tokenize_training_text(read_file(path), delims);
}

void print_trace(const lm::TrainingTrace& trace) {
  std::printf("pass,avg_nll\n");
  for (const auto& t : trace) std::printf("%zu,%.17g\n", t.pass, t.avg_nll);
}

std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IdeaForge: design concept generation from problems and analogies"};
  app.require_subcommand(1);

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Design-record corpus tools");
  corpus_cmd->require_subcommand(1);
  std::string corpus_file, corpus_out;
  bool no_delims = false;
  auto* ingest = corpus_cmd->add_subcommand("ingest", "Validate a JSONL corpus and print it in canonical form");
  ingest->add_option("file", corpus_file)->required();
  ingest->add_option("--out", corpus_out, "Write canonical JSONL here instead of stdout");
  auto* stats = corpus_cmd->add_subcommand("stats", "Record counts by kind, year and category");
  stats->add_option("file", corpus_file)->required();
  auto* format = corpus_cmd->add_subcommand("format", "Write the training-text file");
  format->add_option("file", corpus_file)->required();
  format->add_option("--out", corpus_out)->required();
  format->add_flag("--no-delims", no_delims, "Omit start/end markers");

  // lm
  auto* lm_cmd = app.add_subcommand("lm", "Reference n-gram language model");
  lm_cmd->require_subcommand(1);
  std::string train_text, model_out, model_in, heldout;
  lm::TrainOptions train_opts;
  std::size_t min_count = 1;
  auto* train = lm_cmd->add_subcommand("train", "Train on a training-text file; prints the trace as CSV");
  train->add_option("training-text", train_text)->required();
  train->add_option("--order", train_opts.order)->capture_default_str();
  train->add_option("--alpha", train_opts.alpha)->capture_default_str();
  train->add_option("--lambda", train_opts.lambda)->capture_default_str();
  train->add_option("--passes", train_opts.passes)->capture_default_str();
  train->add_option("--min-count", min_count, "Rarer tokens map to <unk>")->capture_default_str();
  train->add_option("--out", model_out)->required();
  train->add_flag("--no-delims", no_delims, "Training text has no start/end markers");
  auto* lm_eval = lm_cmd->add_subcommand("eval", "Held-out perplexity and the stored trace");
  lm_eval->add_option("model", model_in)->required();
  lm_eval->add_option("heldout", heldout)->required();
  lm_eval->add_flag("--no-delims", no_delims, "Held-out text has no start/end markers");

  // prompt
  auto* prompt_cmd = app.add_subcommand("prompt", "Print exact prompt bytes");
  prompt_cmd->require_subcommand(1);
  std::string category, problem, bank_path, source, target;
  std::optional<std::uint64_t> shuffle_seed;
  auto* prompt_problem = prompt_cmd->add_subcommand("problem", "Problem-driven prompt");
  prompt_problem->add_option("--category", category)->required();
  prompt_problem->add_option("--problem", problem)->required();
  prompt_problem->add_flag("--no-delims", no_delims);
  auto* prompt_analogy = prompt_cmd->add_subcommand("analogy", "Analogy-driven few-shot prompt");
  prompt_analogy->add_option("--bank", bank_path)->required();
  prompt_analogy->add_option("--source", source)->required();
  prompt_analogy->add_option("--target", target)->required();
  prompt_analogy->add_option("--shuffle-seed", shuffle_seed);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "One-shot session: create, generate, print candidates");
  gen_cmd->require_subcommand(1);
  DecodingFlags dflags;
  BackendFlags bflags;
  std::string config_path, export_path, data_dir, corpus_refs;
  auto* gen_problem = gen_cmd->add_subcommand("problem", "Problem-driven generation");
  gen_problem->add_option("--category", category)->required();
  gen_problem->add_option("--problem", problem)->required();
  auto* gen_analogy = gen_cmd->add_subcommand("analogy", "Analogy-driven generation");
  gen_analogy->add_option("--bank", bank_path, "Example bank (defaults to the config's service.bank)");
  gen_analogy->add_option("--source", source)->required();
  gen_analogy->add_option("--target", target)->required();
  gen_analogy->add_option("--shuffle-seed", shuffle_seed);
  for (auto* sub : {gen_problem, gen_analogy}) {
    dflags.attach(sub);
    bflags.attach(sub);
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--export", export_path, "Write the exported session here");
    sub->add_option("--data-dir", data_dir, "Persist the session under this directory");
    sub->add_option("--corpus", corpus_refs, "Corpus whose descriptions count against novelty");
  }

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score and rank a candidate pool");
  std::string pool_path, anchor, eval_out;
  std::optional<double> novelty_threshold;
  bool keep_all = false;
  eval_cmd->add_option("--pool", pool_path, "JSONL lines with at least a text field")->required();
  eval_cmd->add_option("--bank", bank_path, "Example bank used as novelty references");
  eval_cmd->add_option("--anchor", anchor, "Problem statement or target domain")->required();
  eval_cmd->add_option("--novelty-threshold", novelty_threshold);
  eval_cmd->add_option("--config", config_path);
  eval_cmd->add_option("--out", eval_out, "Write ranked JSONL here instead of stdout");
  eval_cmd->add_flag("--all", keep_all, "Also print filtered-out candidates after the ranked ones");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  std::optional<int> port;
  std::string host = "127.0.0.1";
  serve->add_option("--port", port);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--bank", bank_path, "Default example bank for analogy sessions");
  serve->add_option("--corpus", corpus_refs, "Corpus whose descriptions count against novelty");
  serve->add_option("--config", config_path);
  bflags.attach(serve);

  CLI11_PARSE(app, argc, argv);

  const corpus::Delimiters delims = no_delims ? corpus::Delimiters::none() : corpus::Delimiters{};

  try {
    if (ingest->parsed()) {
      const auto records = corpus::parse_corpus_file(corpus_file);
      std::string out;
      for (const auto& r : records) out += corpus::serialize_record(r) + "\n";
      if (corpus_out.empty()) {
        std::cout << out;
      } else {
        write_file(corpus_out, out);
      }
      std::cerr << records.size() << " records\n";
    } else if (stats->parsed()) {
      const auto records = corpus::parse_corpus_file(corpus_file);
      std::cout << json(corpus::corpus_stats(records)).dump(2) << "\n";
    } else if (format->parsed()) {
      const auto records = corpus::parse_corpus_file(corpus_file);
      write_file(corpus_out, corpus::format_training_file(records, delims));
    } else if (train->parsed()) {
      const auto blocks = load_blocks(train_text, delims);
      const auto vocab = textkit::build_vocab(blocks, min_count);
      const auto seqs = lm::frame_sequences(vocab, blocks);
      const auto result = lm::train(vocab, seqs, train_opts);
      lm::save(result.model, result.trace, model_out);
      print_trace(result.trace);
    } else if (lm_eval->parsed()) {
      const auto file = lm::load(model_in);
      const auto seqs = lm::frame_sequences(file.model.vocab(), load_blocks(heldout, delims));
      std::printf("perplexity,%.17g\n", lm::perplexity(file.model, seqs));
      print_trace(file.trace);
    } else if (prompt_problem->parsed()) {
      std::cout << prompting::build_problem_prompt({category, problem}, delims);
    } else if (prompt_analogy->parsed()) {
      prompting::AnalogyPrompt p{prompting::load_example_bank(bank_path), source, target, shuffle_seed};
      std::cout << prompting::build_analogy_prompt(p);
    } else if (gen_problem->parsed() || gen_analogy->parsed()) {
      auto cfg = load_cfg(config_path);
      bflags.apply(cfg);
      const auto backend = cfg.default_backend();
      if (!backend) throw ValidationError("pass --model or --remote-base (or set them in the config)");
      const auto params = dflags.apply(cfg.params);

      service::SessionInputs inputs;
      eval::Mode mode = eval::Mode::problem_driven;
      if (gen_problem->parsed()) {
        inputs = prompting::ProblemPrompt{category, problem};
      } else {
        mode = eval::Mode::analogy;
        const std::string bank = bank_path.empty() ? cfg.bank : bank_path;
        if (bank.empty()) throw ValidationError("analogy generation needs --bank");
        inputs = prompting::AnalogyPrompt{prompting::load_example_bank(bank), source, target, shuffle_seed};
      }
      service::BackendCache cache;
      service::StoreOptions opts;
      opts.thresholds = cfg.thresholds;
      opts.corpus_references = corpus_descriptions(corpus_refs.empty() ? cfg.corpus : corpus_refs);
      if (!data_dir.empty()) opts.data_dir = data_dir;
      service::SessionStore store(cache.provider(), opts);
      const auto session = store.create_session(mode, inputs, params, *backend);
      for (const auto& c : store.generate_batch(session.id, params.n_candidates)) {
        std::cout << json(c).dump() << "\n";
      }
      if (!export_path.empty()) write_file(export_path, store.export_session(session.id));
    } else if (eval_cmd->parsed()) {
      auto cfg = load_cfg(config_path);
      if (novelty_threshold) cfg.thresholds.novelty = *novelty_threshold;
      cfg.thresholds.validate();
      eval::EvaluationContext ctx{{}, anchor, cfg.thresholds};
      if (!bank_path.empty()) {
        for (const auto& e : prompting::load_example_bank(bank_path)) ctx.references.push_back(e.description);
      }
      std::ifstream in(pool_path);
      if (!in) throw Error("cannot open " + pool_path);
      std::vector<eval::ConceptCandidate> pool;
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::exception& e) {
          throw ParseError(n, e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) throw ParseError(n, "need a text field");
        eval::ConceptCandidate c;
        c.id = j.value("id", "p" + std::to_string(n));
        c.text = j["text"].get<std::string>();
        c.scores = eval::evaluate(c.text, ctx);
        pool.push_back(std::move(c));
      }
      const auto ranked = eval::rank_and_filter(pool, cfg.thresholds);
      std::string out;
      auto emit = [&out](const eval::ConceptCandidate& c, bool kept) {
        out += json{{"id", c.id}, {"text", c.text}, {"scores", *c.scores}, {"kept", kept}}.dump() + "\n";
      };
      for (const auto& c : ranked) emit(c, true);
      if (keep_all) {
        for (const auto& c : pool) {
          const bool kept = std::any_of(ranked.begin(), ranked.end(), [&](const auto& r) { return r.id == c.id; });
          if (!kept) emit(c, false);
        }
      }
      if (eval_out.empty()) {
        std::cout << out;
      } else {
        write_file(eval_out, out);
      }
    } else if (serve->parsed()) {
      auto cfg = load_cfg(config_path);
      bflags.apply(cfg);
      if (port) cfg.port = *port;
      if (!data_dir.empty()) cfg.data_dir = data_dir;
      if (!bank_path.empty()) cfg.bank = bank_path;

      service::BackendCache cache;
      service::ApiDefaults defaults;
      defaults.params = cfg.params;
      defaults.backend = cfg.default_backend();
      if (defaults.backend && defaults.backend->kind == backends::BackendKind::local) {
        cache.add(*defaults.backend, backends::LocalBackend::open(*defaults.backend));  // fail fast on a bad model
      }
      if (!cfg.bank.empty()) defaults.bank = prompting::load_example_bank(cfg.bank);

      service::StoreOptions opts;
      opts.data_dir = cfg.data_dir;
      opts.thresholds = cfg.thresholds;
      opts.snapshot_interval = cfg.snapshot_interval;
      opts.corpus_references = corpus_descriptions(corpus_refs.empty() ? cfg.corpus : corpus_refs);
      service::SessionStore store(cache.provider(), opts);

      httplib::Server server;
      service::register_routes(server, store, defaults);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << cfg.port << " (" << store.size() << " sessions loaded)\n";
      if (!server.listen(host, cfg.port)) throw Error("cannot listen on port " + std::to_string(cfg.port));
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
