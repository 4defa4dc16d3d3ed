#pragma once

// Decision policy backed by a remote vision-language model reachable over HTTP.
// The model sees the raw mask and the recognition overlay and must answer with
// "ANSWER: YES" or "ANSWER: NO".

#include <chrono>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "deform/adp.hpp"

namespace deform::adp {

/// Structured prompt. The output format must name both answer tokens.
struct PromptTemplate {
  std::string task;
  std::string input_data;
  std::vector<std::string> conditions;
  std::string output_format;

  void validate() const;
};

PromptTemplate load_prompt_template(const std::string& path);
PromptTemplate parse_prompt_template(const std::string& yaml_text, const std::string& origin = "<string>");

/// Prompt text for one judgment: the template plus the recognizer's report.
std::string build_prompt(const PromptTemplate& tmpl, const recognizer::Representation& rep);

struct RemoteConfig {
  std::string endpoint = "http://127.0.0.1:8765";  // scheme://host:port
  std::string path = "/v1/judge";
  std::string model;
  /// Name of the environment variable holding a bearer token; empty disables auth.
  std::string api_key_env = "DEFORM_VLM_API_KEY";
  double connect_timeout_s = 5.0;
  double read_timeout_s = 60.0;
  int retries = 3;
  double backoff_base_s = 1.0;

  /// DEFORM_VLM_ENDPOINT overrides `endpoint` when set.
  void apply_environment();
};

class RemoteUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

/// Sends {prompt, images: [mask PGM, overlay PGM] (base64)} as JSON; the reply body is plain text.
/// Transport failures are retried with exponential backoff; once retries run
/// out the call raises RemoteUnavailable. A reply with no answer token counts as
/// NO and is flagged malformed.
class RemotePolicy final : public Policy {
 public:
  RemotePolicy(RemoteConfig config, PromptTemplate tmpl);
  ~RemotePolicy() override;
  std::string name() const override { return "remote"; }
  Verdict judge(const JudgeContext& ctx) override;

  /// Replaces the sleep between retries (tests).
  void set_sleeper(std::function<void(std::chrono::duration<double>)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  struct Connection;
  RemoteConfig config_;
  PromptTemplate template_;
  std::unique_ptr<Connection> connection_;
  std::function<void(std::chrono::duration<double>)> sleeper_;
};

}  // namespace deform::adp
