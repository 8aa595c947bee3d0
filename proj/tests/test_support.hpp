#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ideaforge/corpus.hpp"
#include "ideaforge/error.hpp"
#include "ideaforge/reference_lm.hpp"
#include "ideaforge/textkit.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return IDEAFORGE_DATA_DIR; }
inline std::filesystem::path golden_dir() { return IDEAFORGE_GOLDEN_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ideaforge-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Trigram model on the bundled corpus, trained once per process.
inline const ideaforge::lm::TrainResult& mini_model(std::size_t passes = 5) {
  static const auto result = [passes] {
    const auto records = ideaforge::corpus::parse_corpus_file(data_dir() / "mini_corpus.jsonl");
    const auto blocks = ideaforge::lm::tokenize_training_text(ideaforge::corpus::format_training_file(records));
    const auto vocab = ideaforge::textkit::build_vocab(blocks);
    ideaforge::lm::TrainOptions opts;
    opts.passes = passes;
    return ideaforge::lm::train(vocab, ideaforge::lm::frame_sequences(vocab, blocks), opts);
  }();
  return result;
}

inline std::shared_ptr<const ideaforge::lm::NGramModel> shared_mini_model() {
  static const auto model = std::make_shared<const ideaforge::lm::NGramModel>(mini_model().model);
  return model;
}

}  // namespace testing
