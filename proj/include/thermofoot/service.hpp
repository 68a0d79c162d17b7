#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace thermofoot::service {

namespace fs = std::filesystem;

enum class SessionState { AwaitingFrames, AwaitingSegmentation, AwaitingLandmarks, Analyzed };

std::string to_string(SessionState s);
SessionState parse_session_state(const std::string& s);

struct Reply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  static Reply json(int status, const nlohmann::json& body);
  static Reply error(int status, const std::string& code, const std::string& message);
};

struct FrameUpload {
  std::string frame;                       // raw u16le bytes
  std::string sidecar;                     // JSON, same schema as the CLI's .raw.json files
  std::optional<std::string> calibration;  // JSON; required with the first plantar frame
};

/// Session state machine and persistence. Each session lives in `root/<id>/` as a session
/// document the CLI can analyze directly. Calls on one session are serialised; calls on
/// different sessions run concurrently.
class SessionStore {
 public:
  explicit SessionStore(fs::path root);

  Reply create(const std::string& body);
  Reply status(const std::string& id);
  Reply upload_frame(const std::string& id, const FrameUpload& upload);
  Reply render(const std::string& id, const std::string& view, bool overlay_hotspots);
  Reply scribbles(const std::string& id, const std::string& body);
  Reply landmarks(const std::string& id, const std::string& body);
  Reply analyze(const std::string& id);
  Reply report(const std::string& id);
  Reply audit(const std::string& id);

  fs::path session_dir(const std::string& id) const { return root_ / id; }

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& id);

  fs::path root_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

struct HttpOptions {
  fs::path root = "sessions";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0: any free port
  std::string cors_origin = "*";
};

/// HTTP binding of SessionStore.
class HttpService {
 public:
  explicit HttpService(HttpOptions options);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds the listening socket and returns the bound port.
  int bind();
  /// Serves until stop(); call bind() first.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace thermofoot::service
