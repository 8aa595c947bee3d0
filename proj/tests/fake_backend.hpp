#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>

#include "ideaforge/backends.hpp"

namespace testing {

// Scriptable backend: candidate i of a request gets text(request, i).
class FakeBackend : public ideaforge::backends::Backend {
 public:
  using TextFn = std::function<std::string(const ideaforge::backends::CompletionRequest&, std::size_t)>;

  explicit FakeBackend(TextFn text = {}) : text_(std::move(text)) {
    descriptor_.kind = ideaforge::backends::BackendKind::local;
    descriptor_.model_path = "fake.bin";
  }

  std::vector<ideaforge::decoding::GenerationResult> complete(
      const ideaforge::backends::CompletionRequest& request) override {
    ++calls;
    if (fail) throw ideaforge::backends::BackendError(ideaforge::backends::BackendErrorKind::http_status, "scripted", 503, 4);
    std::vector<ideaforge::decoding::GenerationResult> out;
    for (std::size_t i = 0; i < request.params.n_candidates; ++i) {
      ideaforge::decoding::GenerationResult r;
      r.text = text_ ? text_(request, i) : default_text(request.params.seed + i);
      r.params = request.params;
      r.params.seed = request.params.seed + i;
      out.push_back(std::move(r));
    }
    return out;
  }

  const ideaforge::backends::BackendDescriptor& descriptor() const override { return descriptor_; }

  static std::string default_text(std::uint64_t seed) {
    std::string s = "drone lantern concept";
    for (int i = 0; i < 40; ++i) s += " w" + std::to_string((seed * 131 + static_cast<std::uint64_t>(i)) % 100003);
    return s;
  }

  std::atomic<bool> fail{false};
  std::atomic<int> calls{0};

 private:
  TextFn text_;
  ideaforge::backends::BackendDescriptor descriptor_;
};

}  // namespace testing
