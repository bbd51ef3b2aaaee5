#pragma once

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rooftop/labels.hpp"

namespace rooftop {

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProviderKind { internal_model, external_process, external_http };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::internal_model;
  std::string location;  // model path, shell command, or URL
  Task task = Task::roof_pitch;
  std::vector<std::string> classes;
  std::chrono::milliseconds timeout{60000};  // per batch
  std::size_t batch_size = 512;
  std::size_t max_connections = 4;

  void validate() const;
};

/// "cmd:<shell command>", "http://..." / "http:<host:port/path>", otherwise a
/// model file path. Classes default to the task's canonical list.
ProviderConfig parse_provider(const std::string& spec, Task task);

/// One model input: an inline feature vector or a reference (e.g. a chip
/// path) the provider resolves itself.
struct PredictInput {
  std::string id;
  std::vector<float> vector;
  std::string input_ref;
};

struct ProviderReply {
  std::map<std::string, std::vector<double>> probs;
  std::map<std::string, std::string> failures;  // id -> reason
};

/// Checks arity and normalization in place: a vector whose sum is within
/// 1e-3 of 1 is rescaled to sum to 1, anything further off is rejected.
/// Returns an empty string when accepted, else the reason.
std::string normalize_probabilities(std::vector<double>& p, std::size_t arity);

/// NDJSON request lines {"id", "vector" | "input_ref"} in, response lines
/// {"id", "probs"} out. Throws ProviderError on launch failure, timeout or an
/// unparseable response; per-id problems (missing, duplicated, wrong arity,
/// not normalized) are returned as failures.
ProviderReply external_provider_call(const ProviderConfig& config, const std::vector<PredictInput>& batch);

/// Request body for a batch, one JSON object per line.
std::string encode_request(const std::vector<PredictInput>& batch);
/// Parses response lines and validates them against the batch.
ProviderReply decode_response(const std::string& body, const std::vector<PredictInput>& batch, std::size_t arity);

}  // namespace rooftop
