// peakray: service, offline renderer, controller simulator and phantom writer.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "peakray/image_io.hpp"
#include "peakray/raycaster.hpp"
#include "peakray/service.hpp"
#include "peakray/simulator.hpp"
#include "peakray/volume.hpp"

namespace {

using namespace peakray;

enum Exit : int { kOk = 0, kUsage = 1, kMissingInput = 2, kInvalidInput = 3, kWriteFailure = 4 };

std::atomic<bool> g_interrupted{false};

int fail(int code, const std::string& msg) {
  std::cerr << "peakray: " << msg << "\n";
  return code;
}

Vec3 to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

kernels::KernelKind parse_kernel(const std::string& s) {
  if (s == "auto") return kernels::KernelKind::Auto;
  if (s == "scalar") return kernels::KernelKind::Scalar;
  return kernels::KernelKind::Avx2;
}

const std::map<std::string, std::string> kKernelChoices{{"auto", "auto"}, {"scalar", "scalar"}, {"avx2", "avx2"}};

struct RenderArgs {
  std::string volume, tf, out;
  std::vector<double> eye, look_at, up{0, 1, 0}, clip;
  double fov = 0.7;
  int width = 256, height = 256;
  std::optional<double> step, termination;
  int threads = 0;
  std::string kernel = "auto";
};

int run_render(const RenderArgs& a) {
  if (!std::filesystem::exists(a.volume)) return fail(kMissingInput, "volume metadata not found: " + a.volume);
  if (!std::filesystem::exists(a.tf)) return fail(kMissingInput, "transfer function not found: " + a.tf);

  std::optional<Volume> loaded;
  TransferFunction tf;
  try {
    loaded = load_volume(a.volume);
  } catch (const VolumeError& e) {
    return fail(e.kind() == VolumeError::Kind::MissingFile ? kMissingInput : kInvalidInput, e.what());
  }
  try {
    std::ifstream in(a.tf);
    std::stringstream ss;
    ss << in.rdbuf();
    tf = deserialize_tf(ss.str());
  } catch (const TfError& e) {
    return fail(kInvalidInput, a.tf + ": " + e.what());
  }
  const Volume& volume = *loaded;

  Camera cam = default_camera(volume.meta().extent(), a.width, a.height);
  if (!a.eye.empty()) cam.eye = to_vec3(a.eye);
  if (!a.look_at.empty()) cam.look_at = to_vec3(a.look_at);
  cam.up = to_vec3(a.up);
  cam.vertical_fov = a.fov;

  RenderSettings settings = RenderSettings::defaults_for(volume.meta());
  if (a.step) settings.step_size = *a.step;
  if (a.termination) settings.early_termination_alpha = *a.termination;
  settings.threads = a.threads;
  settings.kernel = parse_kernel(a.kernel);

  ClipPlane plane;
  if (!a.clip.empty()) plane = {normalize(Vec3{a.clip[0], a.clip[1], a.clip[2]}), a.clip[3], true};

  FrameBuffer frame;
  try {
    validate(cam);
    validate(settings);
    frame = render_frame(volume, tf, cam, VolumeTransform{}, plane, settings);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  }
  try {
    write_image(frame, a.out);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kWriteFailure, e.what());
  }
  return kOk;
}

struct ServeArgs {
  std::string volume, tf, bind = "127.0.0.1", static_dir;
  int udp_port = wire::kDefaultPort, http_port = 8080;
  int width = 256, height = 256, threads = 0;
  double frame_cap = 30.0;
  std::optional<double> step, termination;
  std::string kernel = "auto";
};

int run_serve(const ServeArgs& a) {
  if (!std::filesystem::exists(a.volume)) return fail(kMissingInput, "volume metadata not found: " + a.volume);
  if (!a.tf.empty() && !std::filesystem::exists(a.tf)) return fail(kMissingInput, "transfer function not found: " + a.tf);

  ServiceConfig config;
  config.volume_path = a.volume;
  if (!a.tf.empty()) config.tf_path = a.tf;
  if (!a.static_dir.empty()) config.static_dir = a.static_dir;
  config.bind_address = a.bind;
  config.udp_port = static_cast<std::uint16_t>(a.udp_port);
  config.http_port = static_cast<std::uint16_t>(a.http_port);
  config.frame_width = a.width;
  config.frame_height = a.height;
  config.render_threads = a.threads;
  config.frame_cap_hz = a.frame_cap;
  config.step_size = a.step;
  config.early_termination_alpha = a.termination;
  config.kernel = parse_kernel(a.kernel);

  std::unique_ptr<Service> service;
  try {
    service = std::make_unique<Service>(config);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kInvalidInput, e.what());
  }
  try {
    service->start();
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  std::cerr << "peakray: serving http://" << a.bind << ":" << service->http_port() << " (udp " << service->udp_port()
            << ", kernel " << kernels::name(kernels::resolve(config.kernel)) << ")\n";

  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service->stop();
  std::cerr << "peakray: " << service->stats_json().dump() << "\n";
  return kOk;
}

struct SimulateArgs {
  std::string script, host = "127.0.0.1", trace;
  int port = wire::kDefaultPort;
  double rate = 60.0;
  int start_seq = 0;
  std::uint64_t start_timestamp = 0;
  bool realtime = false;
  bool dry_run = false;
};

int run_simulate(const SimulateArgs& a) {
  if (!std::filesystem::exists(a.script)) return fail(kMissingInput, "script not found: " + a.script);
  ControllerScript script;
  try {
    script = load_script(a.script);
  } catch (const std::exception& e) {
    return fail(kInvalidInput, a.script + ": " + e.what());
  }
  SimulationOptions opt;
  opt.rate_hz = a.rate;
  opt.start_seq = static_cast<std::uint16_t>(a.start_seq);
  opt.start_timestamp_us = a.start_timestamp;
  opt.realtime = a.realtime;

  MemorySink memory;
  std::unique_ptr<UdpSink> udp;
  SimulationReport report;
  try {
    if (!a.dry_run) udp = std::make_unique<UdpSink>(a.host, static_cast<std::uint16_t>(a.port));
    report = simulator_run(script, opt, a.dry_run ? static_cast<DatagramSink&>(memory) : *udp);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  if (!a.trace.empty()) {
    std::ofstream out(a.trace, std::ios::binary);
    for (const auto& p : generate_packets(script, opt)) out.write(reinterpret_cast<const char*>(p.data()), p.size());
    if (!out) return fail(kWriteFailure, "cannot write trace " + a.trace);
  }
  std::cerr << "peakray: sent " << report.packets_sent << " packets (" << report.send_failures << " failed), next seq "
            << report.next_seq << "\n";
  return report.send_failures == 0 ? kOk : kWriteFailure;
}

int run_phantom(const std::vector<int>& dims, const std::string& out) {
  std::optional<Volume> v;
  try {
    v = generate_phantom({dims[0], dims[1], dims[2]});
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  try {
    save_volume(*v, out);
  } catch (const std::exception& e) {
    return fail(kWriteFailure, e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peak-based transfer function volume renderer"};
  app.require_subcommand(1);

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render one frame to a .png or .ppm file");
  render->add_option("--volume", ra.volume, "Volume metadata file (.meta)")->required();
  render->add_option("--tf", ra.tf, "Transfer function JSON")->required();
  render->add_option("--out", ra.out, "Output image (.png or .ppm)")->required();
  render->add_option("--eye", ra.eye, "Camera position x,y,z (default: framing the volume on +z)")->delimiter(',')->expected(3);
  render->add_option("--look-at", ra.look_at, "Camera target x,y,z")->delimiter(',')->expected(3);
  render->add_option("--up", ra.up, "Camera up vector x,y,z")->capture_default_str()->delimiter(',')->expected(3);
  render->add_option("--fov", ra.fov, "Vertical field of view in radians")->capture_default_str();
  render->add_option("--width", ra.width, "Image width")->capture_default_str();
  render->add_option("--height", ra.height, "Image height")->capture_default_str();
  render->add_option("--step", ra.step, "Ray step in world units (default: half the smallest voxel spacing)");
  render->add_option("--early-termination", ra.termination, "Accumulated alpha that stops a ray");
  render->add_option("--threads", ra.threads, "Render threads, 0 = all cores")->capture_default_str();
  render->add_option("--kernel", ra.kernel, "Ray-march kernel: auto, scalar, avx2")->capture_default_str()->transform(CLI::IsMember(kKernelChoices));
  render->add_option("--clip", ra.clip, "Clip plane nx,ny,nz,offset in volume space; keeps n.p <= offset")
      ->delimiter(',')
      ->expected(4);

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Run the interactive rendering service");
  serve->add_option("--volume", sa.volume, "Volume metadata file (.meta)")->required();
  serve->add_option("--tf", sa.tf, "Initial transfer function JSON");
  serve->add_option("--bind", sa.bind, "HTTP bind address")->capture_default_str();
  serve->add_option("--udp-port", sa.udp_port, "Controller UDP port, 0 = ephemeral")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--http-port", sa.http_port, "HTTP/WebSocket port, 0 = ephemeral")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--width", sa.width, "Frame width")->capture_default_str();
  serve->add_option("--height", sa.height, "Frame height")->capture_default_str();
  serve->add_option("--frame-cap", sa.frame_cap, "Maximum frames per second")->capture_default_str();
  serve->add_option("--step", sa.step, "Ray step in world units");
  serve->add_option("--early-termination", sa.termination, "Accumulated alpha that stops a ray");
  serve->add_option("--threads", sa.threads, "Render threads, 0 = all cores")->capture_default_str();
  serve->add_option("--kernel", sa.kernel, "Ray-march kernel: auto, scalar, avx2")->capture_default_str()->transform(CLI::IsMember(kKernelChoices));
  serve->add_option("--static-dir", sa.static_dir, "Directory served at / (browser UI build)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Replay a controller trajectory script as UDP packets");
  simulate->add_option("script", sim.script, "Trajectory script (JSON keyframes)")->required();
  simulate->add_option("--host", sim.host, "Destination host")->capture_default_str();
  simulate->add_option("--port", sim.port, "Destination UDP port")->capture_default_str()->check(CLI::Range(1, 65535));
  simulate->add_option("--rate", sim.rate, "Packets per second per device (1-1000)")->capture_default_str();
  simulate->add_option("--start-seq", sim.start_seq, "First sequence number")->capture_default_str()->check(CLI::Range(0, 65535));
  simulate->add_option("--start-timestamp", sim.start_timestamp, "Timestamp of the first tick in microseconds")->capture_default_str();
  simulate->add_flag("--realtime", sim.realtime, "Pace packets at wall-clock rate");
  simulate->add_option("--trace", sim.trace, "Also write the raw packet stream to this file");
  simulate->add_flag("--dry-run", sim.dry_run, "Generate packets without sending");

  std::vector<int> dims{64, 64, 64};
  std::string phantom_out;
  auto* phantom = app.add_subcommand("phantom", "Write the synthetic nested-shell test volume");
  phantom->add_option("--dims", dims, "Dimensions x,y,z (each >= 16)")->capture_default_str()->delimiter(',')->expected(3);
  phantom->add_option("--out", phantom_out, "Output metadata path (.meta; the .raw goes alongside)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (*render) return run_render(ra);
  if (*serve) return run_serve(sa);
  if (*simulate) return run_simulate(sim);
  if (*phantom) return run_phantom(dims, phantom_out);
  return kUsage;
}
