#include "peakray/service.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "http_frontend.hpp"
#include "peakray/image_io.hpp"

namespace peakray {

namespace {

using Clock = std::chrono::steady_clock;

struct Command {
  enum class Kind { Sample, Inject, SetTf, RequestFrame };
  Kind kind = Kind::Sample;
  ControllerSample sample;
  TransferFunction tf;
  std::shared_ptr<std::promise<EventLog>> done;
};

TransferFunction load_tf_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transfer function " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_tf(ss.str());
}

bool render_relevant_change(const SessionState& a, const SessionState& b) {
  return a.tf != b.tf || a.transform != b.transform || a.plane != b.plane;
}

bool observable_change(const SessionState& a, const SessionState& b) {
  return render_relevant_change(a, b) || a.edit_mode != b.edit_mode || a.context != b.context ||
         a.bulb_color != b.bulb_color;
}

nlohmann::json color_json(const ColorRGB& c) { return {c.r, c.g, c.b}; }

nlohmann::json session_state_json(const SessionSnapshot& snap) {
  const SessionState& st = snap.state;
  const auto& r = st.transform.rotation;
  nlohmann::json rot = nlohmann::json::array();
  for (double v : r.m) rot.push_back(v);
  const auto& t = st.transform.translation;
  const auto& n = st.plane.normal;
  return {{"version", snap.version},
          {"render_version", snap.render_version},
          {"edit_mode", to_string(st.edit_mode)},
          {"context", to_string(st.context)},
          {"bulb_color", color_json(st.bulb_color)},
          {"selected", st.tf.selected() ? nlohmann::json(*st.tf.selected()) : nlohmann::json(nullptr)},
          {"transform", {{"rotation", rot}, {"translation", {t.x, t.y, t.z}}}},
          {"clip", {{"normal", {n.x, n.y, n.z}}, {"offset", st.plane.offset}, {"enabled", st.plane.enabled}}}};
}

}  // namespace

void validate(const ServiceConfig& c) {
  if (c.udp_port != 0 && c.udp_port == c.http_port) throw std::invalid_argument("UDP and HTTP ports must differ");
  if (!(c.frame_cap_hz >= 1.0 && c.frame_cap_hz <= 120.0))
    throw std::invalid_argument("frame cap must be in [1, 120] frames/s");
  if (c.frame_width < 1 || c.frame_height < 1) throw std::invalid_argument("frame size must be at least 1x1");
}

struct Service::Impl {
  Impl(Service& owner, ServiceConfig cfg, Volume vol, TransferFunction tf)
      : self(owner), config(std::move(cfg)), volume(std::move(vol)), queue(config.queue_capacity) {
    camera = default_camera(volume.meta().extent(), config.frame_width, config.frame_height);
    settings = RenderSettings::defaults_for(volume.meta());
    if (config.step_size) settings.step_size = *config.step_size;
    if (config.early_termination_alpha) settings.early_termination_alpha = *config.early_termination_alpha;
    settings.threads = config.render_threads;
    settings.kernel = config.kernel;
    validate(settings);
    kernels::resolve(settings.kernel);

    state.tf = std::move(tf);
    state.gains = config.gains;
    state.bulb_color = bulb_color(state);
    auto snap = std::make_shared<SessionSnapshot>();
    snap->state = state;
    snapshot = snap;
  }

  Service& self;
  ServiceConfig config;
  Volume volume;
  Camera camera;
  RenderSettings settings;

  BoundedQueue<Command> queue;
  std::atomic<std::uint64_t> enqueued{0};
  std::atomic<std::uint64_t> processed{0};

  // Owned by the session thread.
  SessionState state;

  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const SessionSnapshot> snapshot;

  std::mutex render_mutex;
  std::condition_variable render_cv;
  bool frame_requested = false;
  bool stopping = false;

  mutable std::mutex frame_mutex;
  std::shared_ptr<const PublishedFrame> frame;

  std::atomic<std::uint64_t> frames_published{0};
  std::atomic<std::uint64_t> samples_applied{0};
  std::atomic<std::uint64_t> samples_rejected{0};

  std::mutex listener_mutex;
  std::map<std::uint64_t, Listener> listeners;
  std::uint64_t next_listener = 1;

  std::unique_ptr<UdpReceiver> udp;
  std::unique_ptr<HttpFrontend> http;
  std::thread session_thread;
  std::thread render_thread;
  std::atomic<bool> running{false};

  std::shared_ptr<const SessionSnapshot> current() const {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  }

  void broadcast(std::shared_ptr<const StreamMessage> msg) {
    std::lock_guard lock(listener_mutex);
    for (auto& [id, fn] : listeners) fn(msg);
  }

  void broadcast_json(const nlohmann::json& j) {
    broadcast(std::make_shared<const StreamMessage>(StreamMessage{false, j.dump()}));
  }

  std::mutex lifecycle_mutex;

  // False when the service is not running; waiters are released immediately.
  bool enqueue(Command c) {
    std::lock_guard lock(lifecycle_mutex);
    if (!running) return false;
    ++enqueued;
    queue.push(std::move(c));
    return true;
  }

  // Session context: sole writer of `state`.
  void session_loop() {
    while (running) {
      auto cmd = queue.pop(std::chrono::milliseconds(50));
      if (!cmd) continue;
      process(*cmd);
      ++processed;
    }
  }

  void process(Command& cmd) {
    const SessionState before = state;
    EventLog events;
    switch (cmd.kind) {
      case Command::Kind::Sample:
      case Command::Kind::Inject:
        try {
          events = apply_sample(state, cmd.sample);
          ++samples_applied;
        } catch (const InteractionError&) {
          ++samples_rejected;
        }
        break;
      case Command::Kind::SetTf:
        state.tf = cmd.tf;
        state.bulb_color = bulb_color(state);
        break;
      case Command::Kind::RequestFrame: {
        std::lock_guard lock(render_mutex);
        frame_requested = true;
        render_cv.notify_all();
        break;
      }
    }

    if (observable_change(before, state)) {
      auto prev = current();
      auto snap = std::make_shared<SessionSnapshot>();
      snap->state = state;
      snap->version = prev->version + 1;
      snap->render_version = prev->render_version + (render_relevant_change(before, state) ? 1 : 0);
      {
        std::lock_guard lock(snapshot_mutex);
        snapshot = snap;
      }
      for (const auto& e : events) {
        broadcast_json({{"type", "event"}, {"kind", to_string(e.kind)}, {"detail", e.detail}, {"version", snap->version}});
      }
      broadcast_json({{"type", "state"},
                      {"version", snap->version},
                      {"tf", nlohmann::json::parse(serialize_tf(state.tf))},
                      {"session", session_state_json(*snap)}});
      if (snap->render_version != prev->render_version) {
        std::lock_guard lock(render_mutex);
        render_cv.notify_all();
      }
    } else {
      for (const auto& e : events) {
        broadcast_json({{"type", "event"}, {"kind", to_string(e.kind)}, {"detail", e.detail}, {"version", current()->version}});
      }
    }
    if (cmd.done) cmd.done->set_value(std::move(events));
  }

  void publish(const SessionSnapshot& snap) {
    auto out = std::make_shared<PublishedFrame>();
    out->render_version = snap.render_version;
    out->frame = render_frame(volume, snap.state.tf, camera, snap.state.transform, snap.state.plane, settings);
    out->png = encode_png(out->frame);
    out->sequence = frames_published + 1;
    {
      std::lock_guard lock(frame_mutex);
      frame = out;
    }
    ++frames_published;
    broadcast_json({{"type", "frame"},
                    {"sequence", out->sequence},
                    {"render_version", out->render_version},
                    {"width", out->frame.width},
                    {"height", out->frame.height},
                    {"bytes", out->png.size()}});
    broadcast(std::make_shared<const StreamMessage>(StreamMessage{true, std::string(out->png.begin(), out->png.end())}));
  }

  std::uint64_t published_render_version() const {
    std::lock_guard lock(frame_mutex);
    return frame ? frame->render_version : 0;
  }

  // Render context: change-driven, at most frame_cap_hz.
  void render_loop() {
    const auto min_interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / config.frame_cap_hz));
    auto last = Clock::now();
    while (true) {
      {
        std::unique_lock lock(render_mutex);
        render_cv.wait(lock, [&] { return stopping || frame_requested || current()->render_version != published_render_version(); });
        if (stopping) return;
      }
      const auto due = last + min_interval;
      if (Clock::now() < due) {
        std::unique_lock lock(render_mutex);
        render_cv.wait_until(lock, due, [&] { return stopping; });
        if (stopping) return;
      }
      {
        std::lock_guard lock(render_mutex);
        frame_requested = false;
      }
      publish(*current());
      last = Clock::now();
    }
  }
};

Service::Service(ServiceConfig config) {
  validate(config);
  Volume volume = load_volume(config.volume_path);
  TransferFunction tf = config.tf_path ? load_tf_file(*config.tf_path) : TransferFunction{};
  impl_ = std::make_unique<Impl>(*this, std::move(config), std::move(volume), std::move(tf));
  histogram_ = peakray::histogram(impl_->volume);
}

Service::Service(ServiceConfig config, Volume volume, TransferFunction tf) {
  validate(config);
  impl_ = std::make_unique<Impl>(*this, std::move(config), std::move(volume), std::move(tf));
  histogram_ = peakray::histogram(impl_->volume);
}

Service::~Service() { stop(); }

void Service::start() {
  if (impl_->running) return;
  auto& m = *impl_;
  m.udp = std::make_unique<UdpReceiver>(m.config.udp_port, [&m](const ControllerSample& s) {
    Command c;
    c.kind = Command::Kind::Sample;
    c.sample = s;
    m.enqueue(std::move(c));
  });
  m.publish(*m.current());
  m.running = true;
  m.stopping = false;
  m.session_thread = std::thread([&m] { m.session_loop(); });
  m.render_thread = std::thread([&m] { m.render_loop(); });
  try {
    m.http = std::make_unique<HttpFrontend>(*this, m.config.bind_address, m.config.http_port, m.config.static_dir);
  } catch (...) {
    stop();
    throw;
  }
}

void Service::stop() {
  auto& m = *impl_;
  {
    std::lock_guard lock(m.lifecycle_mutex);
    m.running = false;
  }
  {
    std::lock_guard lock(m.render_mutex);
    m.stopping = true;
    m.render_cv.notify_all();
  }
  if (m.session_thread.joinable()) m.session_thread.join();
  if (m.render_thread.joinable()) m.render_thread.join();
  // Release front-end requests still waiting on a command.
  while (auto cmd = m.queue.pop(std::chrono::milliseconds(0))) {
    if (cmd->done) cmd->done->set_value({});
  }
  if (m.http) {
    m.http->stop();
    m.http.reset();
  }
  if (m.udp) m.udp->stop();
}

std::uint16_t Service::udp_port() const { return impl_->udp ? impl_->udp->port() : 0; }
std::uint16_t Service::http_port() const { return impl_->http ? impl_->http->port() : 0; }

std::shared_ptr<const SessionSnapshot> Service::snapshot() const { return impl_->current(); }

std::string Service::tf_json() const { return serialize_tf(snapshot()->state.tf); }

SetTfResult Service::set_tf(std::string_view json_text) {
  Command c;
  try {
    c.tf = deserialize_tf(json_text);
  } catch (const TfError& e) {
    const char* kind = e.kind() == TfError::Kind::Parse      ? "parse"
                       : e.kind() == TfError::Kind::Capacity ? "capacity"
                                                             : "invariant";
    return {false, kind, e.what()};
  }
  c.kind = Command::Kind::SetTf;
  c.done = std::make_shared<std::promise<EventLog>>();
  auto fut = c.done->get_future();
  if (!impl_->enqueue(std::move(c))) return {false, "unavailable", "service is not running"};
  try {
    fut.get();
  } catch (const std::future_error&) {
    return {false, "dropped", "command queue overflowed"};
  }
  return {true, {}, {}};
}

EventLog Service::inject(const ControllerSample& sample) {
  validate(sample);
  Command c;
  c.kind = Command::Kind::Inject;
  c.sample = sample;
  c.done = std::make_shared<std::promise<EventLog>>();
  auto fut = c.done->get_future();
  if (!impl_->enqueue(std::move(c))) throw std::runtime_error("service is not running");
  try {
    return fut.get();
  } catch (const std::future_error&) {
    throw std::runtime_error("injected sample dropped (command queue overflow)");
  }
}

void Service::request_frame() {
  Command c;
  c.kind = Command::Kind::RequestFrame;
  impl_->enqueue(std::move(c));
}

std::shared_ptr<const PublishedFrame> Service::latest_frame() const {
  std::lock_guard lock(impl_->frame_mutex);
  return impl_->frame;
}

ServiceStats Service::stats() const {
  const auto& m = *impl_;
  ServiceStats s;
  s.frames_published = m.frames_published;
  s.commands_processed = m.processed;
  s.samples_applied = m.samples_applied;
  s.samples_rejected = m.samples_rejected;
  s.queue_overflow = m.queue.overflow();
  const auto snap = m.current();
  s.state_version = snap->version;
  s.render_version = snap->render_version;
  s.frame_render_version = m.published_render_version();
  if (m.udp) s.udp = m.udp->stats();
  return s;
}

bool Service::wait_idle(std::chrono::milliseconds timeout) const {
  const auto deadline = Clock::now() + timeout;
  const auto& m = *impl_;
  while (Clock::now() < deadline) {
    const bool drained = m.processed + m.queue.overflow() >= m.enqueued && m.queue.size() == 0;
    bool requested;
    {
      std::lock_guard lock(const_cast<std::mutex&>(m.render_mutex));
      requested = m.frame_requested;
    }
    if (drained && !requested && m.published_render_version() == m.current()->render_version) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return false;
}

std::uint64_t Service::subscribe(Listener listener) {
  std::lock_guard lock(impl_->listener_mutex);
  const auto id = impl_->next_listener++;
  impl_->listeners.emplace(id, std::move(listener));
  return id;
}

void Service::unsubscribe(std::uint64_t id) {
  std::lock_guard lock(impl_->listener_mutex);
  impl_->listeners.erase(id);
}

nlohmann::json Service::session_json() const { return session_state_json(*snapshot()); }

nlohmann::json Service::stats_json() const {
  const auto s = stats();
  return {{"frames_published", s.frames_published},
          {"commands_processed", s.commands_processed},
          {"samples_applied", s.samples_applied},
          {"samples_rejected", s.samples_rejected},
          {"queue_overflow", s.queue_overflow},
          {"state_version", s.state_version},
          {"render_version", s.render_version},
          {"frame_render_version", s.frame_render_version},
          {"udp",
           {{"datagrams", s.udp.datagrams},
            {"delivered", s.udp.delivered},
            {"malformed", s.udp.malformed},
            {"reordered", s.udp.reordered}}}};
}

}  // namespace peakray
