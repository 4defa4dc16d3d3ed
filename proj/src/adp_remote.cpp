#include "deform/adp_remote.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

namespace deform::adp {

namespace {

const char* kYes = "ANSWER: YES";
const char* kNo = "ANSWER: NO";

std::string indent_list(const std::vector<std::string>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) out << "Condition " << (i + 1) << ": " << items[i] << "\n";
  return out.str();
}

}  // namespace

void PromptTemplate::validate() const {
  if (task.empty()) throw std::invalid_argument("prompt template: 'task' is empty");
  if (output_format.find(kYes) == std::string::npos || output_format.find(kNo) == std::string::npos) {
    throw std::invalid_argument("prompt template: 'output_format' must mention both \"ANSWER: YES\" and \"ANSWER: NO\"");
  }
}

PromptTemplate parse_prompt_template(const std::string& yaml_text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  auto field = [&](const char* key) -> std::string {
    const YAML::Node n = root[key];
    if (!n) throw std::invalid_argument(origin + ": missing field '" + key + "'");
    if (!n.IsScalar()) {
      throw std::invalid_argument(origin + ":" + std::to_string(n.Mark().line + 1) + ": field '" + key +
                                  "' must be a string");
    }
    return n.as<std::string>();
  };
  PromptTemplate t;
  t.task = field("task");
  t.input_data = field("input_data");
  t.output_format = field("output_format");
  const YAML::Node conds = root["conditions"];
  if (conds) {
    if (!conds.IsSequence()) {
      throw std::invalid_argument(origin + ":" + std::to_string(conds.Mark().line + 1) +
                                  ": field 'conditions' must be a list");
    }
    for (const auto& c : conds) t.conditions.push_back(c.as<std::string>());
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  return t;
}

PromptTemplate load_prompt_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open prompt template " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_prompt_template(ss.str(), path);
}

std::string build_prompt(const PromptTemplate& tmpl, const recognizer::Representation& rep) {
  std::ostringstream out;
  out << "# Task\n" << tmpl.task << "\n\n# Input data\n" << tmpl.input_data << "\n";
  out << "\nRecognizer report: object=" << sim::to_string(rep.kind)
      << " status=" << (rep.extracted() ? "extracted" : "extraction_failed");
  if (!rep.extracted()) out << " violated=" << rep.violated_assumption;
  out << " keypoints=[";
  for (std::size_t i = 0; i < rep.keypoints.size(); ++i) {
    out << (i ? ", " : "") << "(col " << rep.keypoints[i].col << ", row " << rep.keypoints[i].row << ")";
  }
  out << "]\n";
  if (!tmpl.conditions.empty()) out << "\n# Conditions\n" << indent_list(tmpl.conditions);
  out << "\n# Output format\n" << tmpl.output_format << "\n";
  return out.str();
}

void RemoteConfig::apply_environment() {
  if (const char* e = std::getenv("DEFORM_VLM_ENDPOINT"); e != nullptr && *e != '\0') endpoint = e;
}

std::string base64_encode(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
  std::string out(3 * text.size() / 4 + 1, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes that stand in for padding.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

struct RemotePolicy::Connection {
  explicit Connection(const RemoteConfig& c) : client(c.endpoint) {
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(c.connect_timeout_s)));
    client.set_read_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(c.read_timeout_s)));
    client.set_keep_alive(true);
  }
  httplib::Client client;
};

RemotePolicy::RemotePolicy(RemoteConfig config, PromptTemplate tmpl)
    : config_(std::move(config)), template_(std::move(tmpl)) {
  template_.validate();
  if (config_.retries < 0) throw std::invalid_argument("remote retries must be >= 0");
  if (config_.backoff_base_s < 0.0) throw std::invalid_argument("remote backoff must be >= 0");
  connection_ = std::make_unique<Connection>(config_);
  sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
}

RemotePolicy::~RemotePolicy() = default;

Verdict RemotePolicy::judge(const JudgeContext& ctx) {
  Verdict v;
  v.source = "remote";
  v.prompt = build_prompt(template_, ctx.representation);

  nlohmann::json body;
  body["prompt"] = v.prompt;
  body["images"] = {base64_encode(scene::encode_pgm(scene::mask_image(ctx.observation))),
                    base64_encode(scene::encode_pgm(ctx.overlay))};
  if (!config_.model.empty()) body["model"] = config_.model;
  if (!ctx.episode_id.empty()) body["episode"] = ctx.episode_id;
  body["step"] = ctx.step;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) sleeper_(std::chrono::duration<double>(config_.backoff_base_s * double(1 << (attempt - 1))));
    auto res = connection_->client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    const std::string& text = res->body;
    v.raw_response = text;
    v.reasoning = text;
    try {
      v.recognizable = parse_answer(text);
    } catch (const MalformedAnswer&) {
      v.recognizable = false;
      v.malformed = true;
    }
    return v;
  }
  throw RemoteUnavailable(config_.endpoint + config_.path + " unavailable after " + std::to_string(config_.retries) +
                          " retries: " + last_error);
}

}  // namespace deform::adp
