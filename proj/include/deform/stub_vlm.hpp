#pragma once

// Local stand-in for a vision-language model endpoint, for offline runs and tests.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace deform::stub {

enum class Behavior {
  AlwaysYes,
  AlwaysNo,
  /// Canned responses in order, restarting for each episode; the last one repeats.
  Scripted,
  /// Answers looked up by SHA-256 of the decoded overlay image; unknown images get NO.
  OracleFile,
};

Behavior behavior_from_string(const std::string& text);
std::string to_string(Behavior b);

struct StubConfig {
  Behavior behavior = Behavior::AlwaysNo;
  std::vector<std::string> script;           // Scripted
  std::map<std::string, bool> answers;       // OracleFile: overlay digest -> recognizable
  std::string path = "/v1/judge";
};

/// Script: one response per line; a literal \n inside a line is a line break.
/// Oracle file: JSON lines {"overlay_sha256": ..., "recognizable": bool}.
std::vector<std::string> load_script(const std::string& path);
std::map<std::string, bool> load_answers(const std::string& path);

std::string sha256_hex(const std::string& bytes);

/// Pure request handler: JSON body in, reply text out.
class StubResponder {
 public:
  explicit StubResponder(StubConfig config);
  std::string respond(const std::string& request_body);
  int requests() const;

 private:
  StubConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> cursors_;
  int requests_ = 0;
};

/// HTTP server around a StubResponder.
class StubServer {
 public:
  explicit StubServer(StubConfig config);
  ~StubServer();
  /// Binds (port 0 picks a free port) and serves on a background thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();
  int requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace deform::stub
