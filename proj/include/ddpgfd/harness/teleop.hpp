#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "ddpgfd/env/insertion.hpp"

namespace ddpgfd::harness {

struct TeleopOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  std::filesystem::path out;
  double tick_seconds = 0.1;     // lock-step period: at most one action per tick
  std::uint64_t base_seed = 0;   // episode k of the server's lifetime uses base_seed + k
  int max_sessions = -1;         // stop after this many connections (-1 = serve forever)
  std::function<void(const std::string&)> log;
};

// Frames of the teleoperation wire protocol, one JSON object per websocket
// text message.
nlohmann::json hello_frame(const env::InsertionTask& task, double tick_seconds);
nlohmann::json state_frame(const env::InsertionTask& task, const env::EnvState& state, double reward,
                           std::uint64_t seed);

// Lock-step teleoperation server. The environment is stepped only when an
// action frame arrives, never more often than once per tick; completed
// episodes the client saves are appended to the demo file.
class TeleopServer {
 public:
  TeleopServer(env::EnvConfig config, TeleopOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Port actually bound (useful with port 0).
  unsigned short port() const;
  // Serves sessions one at a time until max_sessions is reached.
  void run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ddpgfd::harness
