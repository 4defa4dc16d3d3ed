#include "deform/stub_vlm.hpp"

#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "deform/adp_remote.hpp"

namespace deform::stub {

Behavior behavior_from_string(const std::string& text) {
  if (text == "always_yes") return Behavior::AlwaysYes;
  if (text == "always_no") return Behavior::AlwaysNo;
  if (text == "scripted") return Behavior::Scripted;
  if (text == "oracle_file") return Behavior::OracleFile;
  throw std::invalid_argument("unknown stub behavior '" + text + "' (always_yes|always_no|scripted|oracle_file)");
}

std::string to_string(Behavior b) {
  switch (b) {
    case Behavior::AlwaysYes: return "always_yes";
    case Behavior::AlwaysNo: return "always_no";
    case Behavior::Scripted: return "scripted";
    case Behavior::OracleFile: return "oracle_file";
  }
  return "?";
}

std::vector<std::string> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open script " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    // A literal "\n" stands for a line break inside one reply.
    for (std::size_t at = line.find("\\n"); at != std::string::npos; at = line.find("\\n", at + 1)) line.replace(at, 2, "\n");
    lines.push_back(line);
  }
  if (lines.empty()) throw std::invalid_argument("script " + path + " is empty");
  return lines;
}

std::map<std::string, bool> load_answers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open answer file " + path);
  std::map<std::string, bool> answers;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      answers[j.at("overlay_sha256").get<std::string>()] = j.at("recognizable").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return answers;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

StubResponder::StubResponder(StubConfig config) : config_(std::move(config)) {
  if (config_.behavior == Behavior::Scripted && config_.script.empty()) {
    throw std::invalid_argument("scripted stub needs at least one response");
  }
}

int StubResponder::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::string StubResponder::respond(const std::string& request_body) {
  const auto req = nlohmann::json::parse(request_body);
  std::lock_guard lock(mutex_);
  ++requests_;
  switch (config_.behavior) {
    case Behavior::AlwaysYes: return "The keypoints look correct.\nANSWER: YES";
    case Behavior::AlwaysNo: return "The object is too deformed.\nANSWER: NO";
    case Behavior::Scripted: {
      const std::string episode = req.value("episode", std::string{});
      std::size_t& cursor = cursors_[episode];
      const std::string& reply = config_.script[std::min(cursor, config_.script.size() - 1)];
      ++cursor;
      return reply;
    }
    case Behavior::OracleFile: {
      const auto& images = req.at("images");
      if (images.size() < 2) return "missing overlay image\nANSWER: NO";
      const auto it = config_.answers.find(sha256_hex(adp::base64_decode(images[1].get<std::string>())));
      return (it != config_.answers.end() && it->second) ? "ANSWER: YES" : "ANSWER: NO";
    }
  }
  return "ANSWER: NO";
}

struct StubServer::Impl {
  explicit Impl(StubConfig c) : path(c.path), responder(std::move(c)) {
    server.Post(path, [this](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(responder.respond(req.body), "text/plain");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    });
  }
  std::string path;
  StubResponder responder;
  httplib::Server server;
  std::thread thread;
};

StubServer::StubServer(StubConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

StubServer::~StubServer() { stop(); }

int StubServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("stub server cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void StubServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw std::runtime_error("stub server cannot listen on " + host + ":" + std::to_string(port));
}

void StubServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int StubServer::requests() const { return impl_->responder.requests(); }

}  // namespace deform::stub
