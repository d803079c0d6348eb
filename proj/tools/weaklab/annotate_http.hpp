#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace weaklab::cli {

struct AnnotateServerConfig {
  std::filesystem::path scenes;  // directory of scene_*.wlb
  std::filesystem::path labels;  // directory of labels_*.wlb, rewritten after every accepted POST
  bool readonly = false;
  std::optional<std::filesystem::path> static_dir;  // served at "/"
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// The annotation service behind `weaklab serve-annotate`. Routes are
/// documented in docs/api.md. A writable server holds an exclusive lock on
/// `<labels>/.annotate.lock` for its lifetime.
class AnnotateServer {
 public:
  explicit AnnotateServer(AnnotateServerConfig config);
  ~AnnotateServer();
  AnnotateServer(const AnnotateServer&) = delete;
  AnnotateServer& operator=(const AnnotateServer&) = delete;

  /// Routes one request without a socket; used by the HTTP layer and tests.
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body);

  /// Binds to `port` (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace weaklab::cli
