#include "ddpgfd/harness/teleop.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "ddpgfd/demo/demo_file.hpp"

namespace ddpgfd::harness {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

json box_json(const env::Box& b) { return json::array({b.lo.x, b.lo.y, b.hi.x, b.hi.y}); }

json points_json(const std::vector<env::Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(json::array({p.x, p.y}));
  return a;
}

// A protocol violation: reported to the client, then the session closes.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace

json hello_frame(const env::InsertionTask& task, double tick_seconds) {
  const auto& c = task.config();
  json walls = json::array();
  for (const auto& w : task.walls()) walls.push_back(box_json(w));
  json geometry{{"walls", walls},
                {"goal_sites", points_json(task.goal_sites())},
                {"opening_sites", points_json(task.opening_sites())},
                {"goal_pose", json::array({task.goal_position().x, task.goal_position().y, 0.0})},
                {"workspace_half_width", c.workspace_half_width},
                {"workspace_top", c.workspace_top},
                {"action_bounds", task.action_bounds()},
                {"tick_seconds", tick_seconds},
                {"max_steps", c.max_steps}};
  if (c.variant == env::Variant::peg) {
    geometry["peg_width"] = c.peg_width;
    geometry["peg_length"] = c.peg_length;
  } else {
    geometry["clip_base_width"] = c.clip_base_width;
    geometry["clip_base_height"] = c.clip_base_height;
    geometry["clip_hinge_offset"] = c.clip_hinge_offset;
    geometry["clip_prong_length"] = c.clip_prong_length;
  }
  return {{"type", "hello"},
          {"variant", env::to_string(c.variant)},
          {"obs_dim", task.observation_dim()},
          {"act_dim", task.action_dim()},
          {"reward_mode", env::to_string(c.reward_mode)},
          {"geometry", geometry}};
}

json state_frame(const env::InsertionTask& task, const env::EnvState& s, double reward, std::uint64_t seed) {
  json shapes = json::array();
  for (const auto& poly : task.plug_shapes(s)) shapes.push_back(points_json(poly));
  return {{"type", "state"},
          {"t", s.step_index},
          {"plug", json::array({s.plug_position.x, s.plug_position.y, s.plug_angle})},
          {"prongs", s.prong_angles},
          {"force", json::array({s.f_applied.x, s.f_applied.y})},
          {"reward", reward},
          {"done", s.done},
          {"success", s.success},
          {"seed", seed},
          {"outline", shapes}};
}

struct TeleopServer::Impl {
  env::InsertionTask task;
  TeleopOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::uint64_t episodes_started = 0;
  std::size_t episodes_saved = 0;

  Impl(env::EnvConfig config, TeleopOptions opts)
      : task(std::move(config)), options(std::move(opts)), acceptor(ioc) {
    if (options.tick_seconds < 0.0) throw std::invalid_argument("tick_seconds must be non-negative");
    prepare_file();
    const tcp::endpoint ep(net::ip::make_address(options.address), options.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void log(const std::string& msg) const {
    if (options.log) options.log(msg);
  }

  // A fresh file gets a header; an existing one must match the task and
  // new episodes continue its numbering.
  void prepare_file() {
    if (options.out.empty()) throw std::invalid_argument("teleop needs an output demo file");
    if (std::filesystem::exists(options.out) && std::filesystem::file_size(options.out) > 0) {
      auto file = demo::read_demo_file(options.out);
      if (file.header.reward_mode != task.config().reward_mode) {
        throw std::runtime_error(options.out.string() + ": recorded with a different reward mode");
      }
      demo::validate_episodes(file, task, options.out.string());
      episodes_saved = file.episodes.size();
    } else {
      demo::DemoFile empty;
      empty.header = demo::header_for(task);
      demo::write_demo_file(options.out, empty);
    }
  }

  void session(websocket::stream<tcp::socket>& ws) {
    using clock = std::chrono::steady_clock;
    const auto tick = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(options.tick_seconds));
    auto send = [&](const json& frame) { ws.write(net::buffer(frame.dump())); };

    send(hello_frame(task, options.tick_seconds));
    demo::DemoEpisode episode;
    env::EnvState state;
    env::Observation obs;
    double episode_return = 0.0;
    auto start_episode = [&] {
      episode = demo::DemoEpisode{};
      episode.variant = task.config().variant;
      episode.seed = options.base_seed + episodes_started++;
      episode.source = "teleop";
      state = task.reset(episode.seed);
      obs = task.observe(state);
      episode_return = 0.0;
      send(state_frame(task, state, 0.0, episode.seed));
    };
    start_episode();
    auto next_tick = clock::now();

    beast::flat_buffer buffer;
    for (;;) {
      buffer.clear();
      try {
        ws.read(buffer);
      } catch (const beast::system_error& e) {
        if (e.code() == websocket::error::closed || e.code() == net::error::eof ||
            e.code() == net::error::connection_reset) {
          return;  // client left; an unsaved episode is dropped
        }
        throw;
      }
      try {
        json msg;
        try {
          msg = json::parse(beast::buffers_to_string(buffer.data()));
        } catch (const json::exception&) {
          throw ProtocolError("malformed frame");
        }
        if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
          throw ProtocolError("frame without a type");
        }
        const std::string type = msg["type"];
        if (type == "action") {
          if (state.done) throw ProtocolError("action after the episode ended");
          env::Action a;
          try {
            a = msg.at("v").get<env::Action>();
          } catch (const json::exception&) {
            throw ProtocolError("action frame needs a numeric array v");
          }
          if (a.size() != task.action_dim()) {
            throw ProtocolError("action has " + std::to_string(a.size()) + " entries, expected " +
                                std::to_string(task.action_dim()));
          }
          for (double v : a) {
            if (!std::isfinite(v)) throw ProtocolError("non-finite action");
          }
          // Lock-step: an action arriving before the next tick waits for it.
          std::this_thread::sleep_until(next_tick);
          next_tick = std::max(clock::now(), next_tick) + tick;
          auto r = task.step(state, a);
          episode.steps.push_back({obs, a, r.reward, r.observation, r.success});
          episode_return += r.reward;
          state = std::move(r.state);
          obs = std::move(r.observation);
          send(state_frame(task, state, r.reward, episode.seed));
          if (state.done) {
            send({{"type", "episode_end"},
                  {"return", episode_return},
                  {"steps", episode.steps.size()},
                  {"success", state.success}});
          }
        } else if (type == "reset") {
          start_episode();
        } else if (type == "save_episode") {
          if (!state.done) throw ProtocolError("save_episode before the episode ended");
          if (episode.steps.empty()) throw ProtocolError("episode already saved or discarded");
          demo::append_episode(options.out, episode, episodes_saved++);
          log("saved episode " + std::to_string(episodes_saved - 1) + " (" + std::to_string(episode.steps.size()) +
              " steps)");
          episode.steps.clear();
        } else if (type == "discard_episode") {
          episode.steps.clear();
        } else {
          throw ProtocolError("unknown frame type '" + type + "'");
        }
      } catch (const ProtocolError& e) {
        log(std::string("protocol error: ") + e.what());
        send({{"type", "error"}, {"msg", e.what()}});
        beast::error_code ignored;
        ws.close(websocket::close_code::policy_error, ignored);
        return;
      }
    }
  }
};

TeleopServer::TeleopServer(env::EnvConfig config, TeleopOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

TeleopServer::~TeleopServer() = default;

unsigned short TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TeleopServer::run() {
  for (int served = 0; impl_->options.max_sessions < 0 || served < impl_->options.max_sessions; ++served) {
    tcp::socket socket(impl_->ioc);
    impl_->acceptor.accept(socket);
    try {
      websocket::stream<tcp::socket> ws(std::move(socket));
      ws.accept();
      impl_->log("session opened");
      impl_->session(ws);
      impl_->log("session closed");
    } catch (const beast::system_error& e) {
      impl_->log(std::string("session aborted: ") + e.what());
    }
  }
}

}  // namespace ddpgfd::harness
