#include <gtest/gtest.h>

#include <thread>

#include "http_client.hpp"
#include "peakray/image_io.hpp"
#include "peakray/sample_json.hpp"
#include "peakray/service.hpp"
#include "peakray/simulator.hpp"
#include "support.hpp"

using namespace peakray;
using json = nlohmann::json;
namespace http = boost::beast::http;

namespace {

ServiceConfig ephemeral_config() {
  ServiceConfig c;
  c.udp_port = 0;
  c.http_port = 0;
  c.frame_width = 64;
  c.frame_height = 64;
  c.frame_cap_hz = 120;
  return c;
}

TransferFunction three_peaks() {
  return TransferFunction({{0.25, 0.08, 0.7, palette::kBlue, true},
                           {0.55, 0.08, 0.7, palette::kGreen, true},
                           {0.85, 0.08, 0.7, palette::kRed, true}},
                          0);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    service = std::make_unique<Service>(ephemeral_config(), generate_phantom({32, 32, 32}), three_peaks());
    service->start();
    ASSERT_TRUE(service->wait_idle(std::chrono::seconds(5)));
  }
  void TearDown() override { service->stop(); }

  std::uint16_t port() const { return service->http_port(); }

  std::unique_ptr<Service> service;
};

template <typename Pred>
bool eventually(Pred pred, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) {
  const auto end = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

}  // namespace

TEST(ServiceConfigTest, Validation) {
  ServiceConfig c;
  c.udp_port = c.http_port = 9000;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = ServiceConfig{};
  c.frame_cap_hz = 0.5;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.frame_cap_hz = 121;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.frame_cap_hz = 120;
  EXPECT_NO_THROW(validate(c));
}

TEST(ServiceStartup, MissingVolumeFails) {
  ServiceConfig c = ephemeral_config();
  c.volume_path = "/nonexistent/volume.meta";
  EXPECT_THROW(Service{c}, VolumeError);
}

TEST(ServiceStartup, PortInUseFails) {
  Service a(ephemeral_config(), generate_phantom({16, 16, 16}));
  a.start();
  ServiceConfig c = ephemeral_config();
  c.http_port = a.http_port();
  Service b(c, generate_phantom({16, 16, 16}));
  EXPECT_THROW(b.start(), std::runtime_error);
  a.stop();
}

TEST_F(ServiceTest, IdleAfterInitialFrame) {
  EXPECT_EQ(service->stats().frames_published, 1u);
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  EXPECT_EQ(service->stats().frames_published, 1u);
  const auto frame = service->latest_frame();
  ASSERT_TRUE(frame);
  EXPECT_EQ(frame->frame.width, 64);
}

TEST_F(ServiceTest, UdpAddPacketPublishesEventAndFrame) {
  std::mutex m;
  std::vector<std::string> texts;
  int binaries = 0;
  const auto id = service->subscribe([&](std::shared_ptr<const StreamMessage> msg) {
    std::lock_guard lock(m);
    if (msg->binary)
      ++binaries;
    else
      texts.push_back(msg->payload);
  });
  UdpSink sink("127.0.0.1", service->udp_port());
  sink.send(wire::encode(test::navpad_sample(button::kAdd), 1));
  ASSERT_TRUE(eventually([&] { return service->snapshot()->state.tf.size() == 4; }));
  ASSERT_TRUE(service->wait_idle(std::chrono::seconds(5)));
  EXPECT_EQ(service->stats().frames_published, 2u);
  service->unsubscribe(id);

  std::lock_guard lock(m);
  bool saw_event = false, saw_state = false, saw_frame = false;
  for (const auto& t : texts) {
    const auto j = json::parse(t);
    if (j["type"] == "event" && j["kind"] == "peak_added") saw_event = true;
    if (j["type"] == "state" && j["tf"]["peaks"].size() == 4) saw_state = true;
    if (j["type"] == "frame") saw_frame = true;
  }
  EXPECT_TRUE(saw_event);
  EXPECT_TRUE(saw_state);
  EXPECT_TRUE(saw_frame);
  EXPECT_EQ(binaries, 1);
}

TEST_F(ServiceTest, MalformedStormKeepsRunning) {
  UdpSink sink("127.0.0.1", service->udp_port());
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::uint8_t> junk(rng() % 100);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
    sink.send(junk);
  }
  ASSERT_TRUE(eventually([&] { return service->stats().udp.malformed >= 1500; }));
  EXPECT_EQ(service->stats().frames_published, 1u);
  EXPECT_EQ(test::http_get(port(), "/state/tf").status, 200);
}

TEST_F(ServiceTest, HistogramEndpoint) {
  const auto r = test::http_get(port(), "/state/histogram");
  ASSERT_EQ(r.status, 200);
  const auto j = json::parse(r.body);
  ASSERT_EQ(j["bins"].size(), 256u);
  const Histogram oracle = histogram(generate_phantom({32, 32, 32}));
  int nonzero = 0;
  for (int b = 0; b < 256; ++b) {
    EXPECT_EQ(j["bins"][b].get<std::uint64_t>(), oracle.bins[b]);
    if (j["bins"][b].get<std::uint64_t>() > 0) ++nonzero;
  }
  EXPECT_EQ(nonzero, 4);
  EXPECT_EQ(j["total"], 32 * 32 * 32);
}

TEST_F(ServiceTest, GetAndPutTf) {
  auto r = test::http_get(port(), "/state/tf");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(deserialize_tf(r.body), three_peaks());

  TransferFunction next({{0.4, 0.2, 0.5, palette::kCyan, true}}, 0);
  r = test::http_call(port(), http::verb::put, "/state/tf", serialize_tf(next));
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(deserialize_tf(test::http_get(port(), "/state/tf").body), next);
  ASSERT_TRUE(service->wait_idle(std::chrono::seconds(5)));
  EXPECT_EQ(service->stats().frames_published, 2u);
  EXPECT_EQ(service->snapshot()->state.bulb_color, palette::kCyan);
}

TEST_F(ServiceTest, PutNinePeaksRejected) {
  json doc = {{"peaks", json::array()}, {"selected", 0}};
  for (int i = 0; i < 9; ++i)
    doc["peaks"].push_back({{"center", 0.5}, {"width", 0.1}, {"height", 0.5}, {"color", {1, 0, 0}}, {"enabled", true}});
  const auto r = test::http_call(port(), http::verb::put, "/state/tf", doc.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body)["error"]["kind"], "capacity");
  EXPECT_EQ(deserialize_tf(test::http_get(port(), "/state/tf").body), three_peaks());

  const auto bad = test::http_call(port(), http::verb::put, "/state/tf", "{\"peaks\": 3}");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(json::parse(bad.body)["error"]["kind"], "parse");
  EXPECT_EQ(service->snapshot()->version, 0u);
}

TEST_F(ServiceTest, InjectNavPadAdd) {
  const auto r = test::http_call(port(), http::verb::post, "/input/sample", R"({"device":"NavPad","buttons":["ADD"]})");
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["events"][0]["kind"], "peak_added");
  EXPECT_EQ(deserialize_tf(test::http_get(port(), "/state/tf").body).size(), 4u);

  const auto bad = test::http_call(port(), http::verb::post, "/input/sample", R"({"device":"Wand"})");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(json::parse(bad.body)["error"]["kind"], "invalid_sample");
}

TEST_F(ServiceTest, ClipEndpointFollowsChord) {
  auto j = json::parse(test::http_get(port(), "/state/clip").body);
  EXPECT_EQ(j["enabled"], false);
  ControllerSample s = test::main_sample({0, 0, 0.1}, button::kModeCenterHeight | button::kModeWidth);
  service->inject(s);
  j = json::parse(test::http_get(port(), "/state/clip").body);
  EXPECT_EQ(j["enabled"], true);
  EXPECT_NEAR(j["offset"].get<double>(), 0.1, 1e-12);
  EXPECT_EQ(j["normal"][2], 1.0);
}

TEST_F(ServiceTest, FrameLatestPngAndPpm) {
  auto r = test::http_get(port(), "/frame/latest");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.headers["Content-Type"], "image/png");
  EXPECT_EQ(r.body.substr(1, 3), "PNG");
  EXPECT_EQ(r.headers["X-Frame-Version"], "0");

  r = test::http_get(port(), "/frame/latest?format=ppm");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.substr(0, 2), "P6");
  const auto frame = service->latest_frame();
  const auto ppm = encode_ppm(frame->frame);
  EXPECT_EQ(r.body, std::string(ppm.begin(), ppm.end()));
}

TEST_F(ServiceTest, RequestFramePublishesWithoutStateChange) {
  const auto r = test::http_call(port(), http::verb::post, "/frame/request", "{}");
  EXPECT_EQ(r.status, 202);
  ASSERT_TRUE(eventually([&] { return service->stats().frames_published == 2; }));
  EXPECT_EQ(service->snapshot()->version, 0u);
}

TEST_F(ServiceTest, UnknownRouteAndMethod) {
  EXPECT_EQ(test::http_get(port(), "/nope").status, 404);
  EXPECT_EQ(test::http_call(port(), http::verb::delete_, "/state/tf").status, 405);
  const auto opt = test::http_call(port(), http::verb::options, "/state/tf");
  EXPECT_EQ(opt.status, 204);
  EXPECT_EQ(opt.headers.at("Access-Control-Allow-Origin"), "*");
}

TEST_F(ServiceTest, SessionAndStats) {
  const auto s = json::parse(test::http_get(port(), "/state/session").body);
  EXPECT_EQ(s["context"], "Navigate");
  EXPECT_EQ(s["edit_mode"], "CenterHeight");
  EXPECT_EQ(s["bulb_color"], json({0.0, 0.0, 1.0}));
  const auto st = json::parse(test::http_get(port(), "/stats").body);
  EXPECT_EQ(st["frames_published"], 1);
}

TEST_F(ServiceTest, StreamHelloFrameAndCommands) {
  test::WsClient ws(port());
  auto hello = ws.read();
  ASSERT_TRUE(hello);
  auto j = json::parse(hello->data);
  EXPECT_EQ(j["type"], "hello");
  EXPECT_EQ(j["tf"]["peaks"].size(), 3u);
  auto meta = ws.read();
  ASSERT_TRUE(meta);
  EXPECT_EQ(json::parse(meta->data)["type"], "frame");
  auto png = ws.read();
  ASSERT_TRUE(png && png->binary);
  EXPECT_EQ(png->data.substr(1, 3), "PNG");

  ws.send(json({{"type", "sample"}, {"sample", {{"device", "NavPad"}, {"buttons", {"DELETE"}}}}}).dump());
  bool ack = false, state = false, frame = false;
  for (int i = 0; i < 12 && !(ack && state && frame); ++i) {
    auto m = ws.read();
    ASSERT_TRUE(m);
    if (m->binary) {
      frame = true;
      continue;
    }
    const auto msg = json::parse(m->data);
    if (msg["type"] == "ack") ack = true;
    if (msg["type"] == "state") {
      EXPECT_EQ(msg["tf"]["peaks"].size(), 2u);
      state = true;
    }
  }
  EXPECT_TRUE(ack);
  EXPECT_TRUE(state);
  EXPECT_TRUE(frame);

  json nine = {{"peaks", json::array()}, {"selected", nullptr}};
  for (int i = 0; i < 9; ++i)
    nine["peaks"].push_back({{"center", 0.5}, {"width", 0.1}, {"height", 0.5}, {"color", {1, 0, 0}}, {"enabled", true}});
  ws.send(json({{"type", "set_tf"}, {"tf", nine}}).dump());
  auto err = ws.read();
  ASSERT_TRUE(err);
  EXPECT_EQ(json::parse(err->data)["type"], "error");
  EXPECT_EQ(json::parse(err->data)["kind"], "capacity");

  ws.send("not json");
  err = ws.read();
  ASSERT_TRUE(err);
  EXPECT_EQ(json::parse(err->data)["kind"], "parse");
}

TEST(ServiceReplay, SameTraceSameResult) {
  const auto script = parse_script(R"([
    {"t": 0.0, "device": "NavPad", "buttons": []},
    {"t": 0.1, "device": "NavPad", "buttons": ["ADD"]},
    {"t": 0.2, "device": "NavPad", "buttons": []},
    {"t": 0.3, "device": "NavPad", "buttons": ["ADD"]},
    {"t": 0.4, "device": "NavPad", "buttons": []},
    {"t": 0.0, "device": "MainController", "pos": [0, 0, 0], "trigger": 1},
    {"t": 0.5, "device": "MainController", "pos": [0.3, 0.1, 0], "trigger": 1}
  ])");
  SimulationOptions o;
  o.rate_hz = 100;
  const auto packets = generate_packets(script, o);

  std::vector<std::string> tfs;
  std::vector<std::vector<std::uint8_t>> frames;
  for (int run = 0; run < 2; ++run) {
    Service svc(ephemeral_config(), generate_phantom({24, 24, 24}), three_peaks());
    svc.start();
    UdpSink sink("127.0.0.1", svc.udp_port());
    for (const auto& p : packets) {
      sink.send(p);
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    ASSERT_TRUE(eventually([&] { return svc.stats().udp.datagrams == packets.size(); }));
    ASSERT_TRUE(svc.wait_idle(std::chrono::seconds(10)));
    EXPECT_EQ(svc.stats().samples_applied, packets.size());
    tfs.push_back(svc.tf_json());
    frames.push_back(svc.latest_frame()->png);
    svc.stop();
  }
  EXPECT_EQ(tfs[0], tfs[1]);
  EXPECT_EQ(frames[0], frames[1]);
  EXPECT_EQ(deserialize_tf(tfs[0]).size(), 5u);
}
