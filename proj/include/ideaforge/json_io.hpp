#pragma once

// JSON mappings for the domain types, found by nlohmann::json through ADL.
// Objects use sorted keys, so dumps are byte-deterministic; doubles are
// written in shortest round-trip form, so parse(dump(x)) == x.
//
// from_json for DecodingParams, Thresholds and BackendDescriptor starts from
// the value already in the target and overwrites only the keys present, so
// callers can layer partial JSON over configured defaults. Unknown keys are
// rejected with ValidationError.

#include "ideaforge/backends.hpp"
#include "ideaforge/corpus.hpp"
#include "ideaforge/decoder.hpp"
#include "ideaforge/evaluator.hpp"
#include "ideaforge/prompting.hpp"
#include "json.hpp"

namespace ideaforge::decoding {
void to_json(nlohmann::json& j, const DecodingParams& p);
void from_json(const nlohmann::json& j, DecodingParams& p);
void to_json(nlohmann::json& j, const GenerationResult& r);
void from_json(const nlohmann::json& j, GenerationResult& r);
}  // namespace ideaforge::decoding

namespace ideaforge::backends {
/// Remote descriptors carry the credential reference and a redacted marker, never a secret.
void to_json(nlohmann::json& j, const BackendDescriptor& d);
void from_json(const nlohmann::json& j, BackendDescriptor& d);
}  // namespace ideaforge::backends

namespace ideaforge::prompting {
void to_json(nlohmann::json& j, const ProblemPrompt& p);
void from_json(const nlohmann::json& j, ProblemPrompt& p);
void to_json(nlohmann::json& j, const AnalogyExample& e);
void from_json(const nlohmann::json& j, AnalogyExample& e);
void to_json(nlohmann::json& j, const AnalogyPrompt& p);
void from_json(const nlohmann::json& j, AnalogyPrompt& p);
}  // namespace ideaforge::prompting

namespace ideaforge::eval {
void to_json(nlohmann::json& j, const Thresholds& t);
void from_json(const nlohmann::json& j, Thresholds& t);
void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);
void to_json(nlohmann::json& j, const CandidateInputs& in);
void from_json(const nlohmann::json& j, CandidateInputs& in);
void to_json(nlohmann::json& j, const ConceptCandidate& c);
void from_json(const nlohmann::json& j, ConceptCandidate& c);
}  // namespace ideaforge::eval

namespace ideaforge::corpus {
void to_json(nlohmann::json& j, const CorpusStats& s);
}  // namespace ideaforge::corpus

namespace ideaforge::backends {
inline constexpr std::string_view kRedacted = "<redacted>";
}
