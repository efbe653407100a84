#include <gtest/gtest.h>

#include <thread>

#include "dglseg.hpp"
#include "dglseg/service.hpp"

using namespace dglseg;
using nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceOptions opts;
    opts.segment.slic.superpixels = 60;
    opts.segment.spec = QuantizationSpec::hsv_hue_saturation(64);
    service_ = std::make_unique<SegmentationService>(opts);
    port_ = service_->bind_to_any_port();
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->listen_after_bind(); });
    service_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    scene_ = generate_synthetic(2, 120, 90, 3, 1.0);
  }
  void TearDown() override {
    service_->stop();
    thread_.join();
  }

  std::string upload(const Image& img, const std::string& query = "") {
    const auto png = encode_png(img);
    auto res = client_->Post("/v1/session" + query, std::string(png.begin(), png.end()), "image/png");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200) << res->body;
    return json::parse(res->body).at("id").get<std::string>();
  }

  httplib::Result post_json(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  // One seed click at the centre pixel of each region.
  json seed_inputs(int side = 7) const {
    json regions = json::array();
    for (int i = 1; i <= scene_.annotation.regions(); ++i) {
      const auto px = scene_.annotation.region_pixels(i);
      const auto mid = px[px.size() / 2];
      regions.push_back({{"label", i}, {"seeds", {{mid.row, mid.col}}}, {"side", side}});
    }
    return {{"seed", 3}, {"regions", regions}};
  }

  std::unique_ptr<SegmentationService> service_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
  SyntheticScene scene_;
};

}  // namespace

TEST(RunLength, RoundTrip) {
  const std::vector<int> v{1, 1, 1, 2, 2, 1, 3};
  EXPECT_EQ(run_length_encode(v), json::parse("[[1,3],[2,2],[1,1],[3,1]]"));
  EXPECT_EQ(run_length_decode(run_length_encode(v)), v);
  EXPECT_EQ(run_length_encode({}), json::array());
}

TEST_F(ServiceTest, CreateSessionReportsMetadata) {
  Image tiny(2, 2, 3, std::vector<double>(12, 0.5));
  const auto png = encode_png(tiny);
  auto res = client_->Post("/v1/session", std::string(png.begin(), png.end()), "image/png");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body.at("width"), 2);
  EXPECT_EQ(body.at("height"), 2);
  EXPECT_EQ(body.at("channels"), 3);
  EXPECT_NE(upload(tiny, "?superpixels=1"), body.at("id").get<std::string>());
  res = client_->Post("/v1/session?superpixels=5", std::string(png.begin(), png.end()), "image/png");
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, CorruptUploadIsClientError) {
  auto res = client_->Post("/v1/session", std::string("\x89PNG garbage", 12), "image/png");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_FALSE(json::parse(res->body).at("message").get<std::string>().empty());
}

TEST_F(ServiceTest, UnknownSessionIs404) {
  auto res = client_->Get("/v1/session/nope/superpixels");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = post_json("/v1/session/nope/relabel", {{"superpixel", 0}, {"label", 1}});
  EXPECT_EQ(res->status, 404);
}

TEST_F(ServiceTest, SuperpixelsCoverTheImage) {
  const auto id = upload(scene_.image);
  auto res = client_->Get("/v1/session/" + id + "/superpixels");
  ASSERT_EQ(res->status, 200);
  const auto body = json::parse(res->body);
  const auto assignment = run_length_decode(body.at("assignment_rle"));
  EXPECT_EQ(assignment.size(), scene_.image.pixel_count());
  EXPECT_EQ(*std::max_element(assignment.begin(), assignment.end()) + 1, body.at("count").get<int>());
}

TEST_F(ServiceTest, TwoSeedsGiveTwoLabelResult) {
  const auto id = upload(scene_.image);
  auto res = post_json("/v1/session/" + id + "/segment", seed_inputs());
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto body = json::parse(res->body);
  EXPECT_EQ(body.at("regions"), 2);
  EXPECT_FALSE(body.at("labels_rle").empty());
  const auto labels = run_length_decode(body.at("labels_rle"));
  EXPECT_EQ(static_cast<int>(labels.size()), body.at("superpixels").get<int>());
  EXPECT_EQ(std::set<int>(labels.begin(), labels.end()), (std::set<int>{1, 2}));
  EXPECT_TRUE(body.at("accuracy").is_null());
  EXPECT_GE(body.at("timing_ms").get<double>(), 0.0);
}

TEST_F(ServiceTest, SegmentationMatchesLibrary) {
  const auto id = upload(scene_.image);
  const auto body = json::parse(post_json("/v1/session/" + id + "/segment", seed_inputs()).value().body);
  // Same inputs through the library directly.
  std::vector<PixelSet> sets;
  for (int i = 1; i <= 2; ++i) {
    const auto px = scene_.annotation.region_pixels(i);
    sets.emplace_back(i, seed_square(px[px.size() / 2], 7, 120, 90), InputSource::Manual, 120, 90);
  }
  SegmentConfig cfg;
  cfg.slic.superpixels = 60;
  cfg.spec = QuantizationSpec::hsv_hue_saturation(64);
  const auto direct = segment(decode_image(encode_png(scene_.image)), sets, cfg);
  EXPECT_EQ(run_length_decode(body.at("labels_rle")), direct.superpixel_labels);
}

TEST_F(ServiceTest, ResubmissionIsIdempotent) {
  const auto id = upload(scene_.image);
  const auto a = json::parse(post_json("/v1/session/" + id + "/segment", seed_inputs()).value().body);
  const auto b = json::parse(post_json("/v1/session/" + id + "/segment", seed_inputs()).value().body);
  EXPECT_EQ(a.at("labels_rle"), b.at("labels_rle"));
}

TEST_F(ServiceTest, OneRegionIsValidationError) {
  const auto id = upload(scene_.image);
  json inputs = seed_inputs();
  inputs["regions"].erase(1);
  auto res = post_json("/v1/session/" + id + "/segment", inputs);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_NE(res->body.find("at least 2 regions"), std::string::npos);
  res = post_json("/v1/session/" + id + "/segment", json::object());
  EXPECT_EQ(res->status, 422);
  res = client_->Post("/v1/session/" + id + "/segment", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, OversizedAlphabetIsConfigurationError) {
  const auto png = encode_png(scene_.image);
  auto res = client_->Post("/v1/session?bins=1", std::string(png.begin(), png.end()), "image/png");
  EXPECT_EQ(res->status, 400);
  res = client_->Post("/v1/session?bins=70000", std::string(png.begin(), png.end()), "image/png");
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, InputsEndpointExpandsBoxesAndSeeds) {
  const auto id = upload(scene_.image);
  const json inputs{{"seed", 1},
                    {"regions",
                     {{{"label", 1}, {"boxes", {{0, 0, 9, 9}}}},
                      {{"label", 2}, {"seeds", {{0, 0}}}, {"side", 5}, {"pixels", {{50, 50}}}}}}};
  auto res = post_json("/v1/session/" + id + "/inputs", inputs);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto body = json::parse(res->body);
  EXPECT_EQ(body.at("regions"), 2);
  EXPECT_EQ(body.at("pixels"), json::parse("[100, 10]"));  // 10x10 box; clipped 3x3 square + 1 pixel
  res = client_->Post("/v1/session/" + id + "/segment", "", "application/json");
  EXPECT_EQ(res->status, 200) << res->body;
  const json gap{{"regions", {{{"label", 1}, {"pixels", {{0, 0}}}}, {{"label", 3}, {"pixels", {{1, 1}}}}}}};
  EXPECT_EQ(post_json("/v1/session/" + id + "/inputs", gap)->status, 422);
}

TEST_F(ServiceTest, RelabelChargesClicksAndImprovesAccuracy) {
  const auto id = upload(scene_.image);
  auto res = post_json("/v1/session/" + id + "/relabel", {{"superpixel", 0}, {"label", 1}});
  EXPECT_EQ(res->status, 409);  // no result yet

  json inputs = seed_inputs();
  const auto seg = json::parse(post_json("/v1/session/" + id + "/segment", inputs).value().body);
  const auto gt_png = encode_label_map(scene_.annotation.label_field());
  res = client_->Post("/v1/session/" + id + "/groundtruth", std::string(gt_png.begin(), gt_png.end()), "image/png");
  ASSERT_EQ(res->status, 200) << res->body;
  const double before = json::parse(res->body).at("accuracy").get<double>();

  // Find a superpixel whose majority GT label differs from its current label.
  const auto assignment = run_length_decode(
      json::parse(client_->Get("/v1/session/" + id + "/superpixels")->body).at("assignment_rle"));
  auto labels = run_length_decode(seg.at("labels_rle"));
  std::vector<std::map<int, int>> votes(labels.size());
  for (std::size_t p = 0; p < assignment.size(); ++p) ++votes[assignment[p]][scene_.annotation.label_field().labels[p]];
  int target = -1, fix = 0;
  for (std::size_t k = 0; k < votes.size() && target < 0; ++k) {
    auto best = std::max_element(votes[k].begin(), votes[k].end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    if (best->first != labels[k]) target = static_cast<int>(k), fix = best->first;
  }
  if (target < 0) {
    // Perfect result: break one superpixel first, then repair it.
    target = 0;
    fix = labels[0];
    post_json("/v1/session/" + id + "/relabel", {{"superpixel", 0}, {"label", 3 - fix}});
  }
  const auto mid = json::parse(post_json("/v1/session/" + id + "/relabel", {{"superpixel", target}, {"label", 3 - fix}})->body);
  const auto after = json::parse(post_json("/v1/session/" + id + "/relabel", {{"superpixel", target}, {"label", fix}})->body);
  EXPECT_EQ(after.at("clicks").get<int>(), mid.at("clicks").get<int>() + 2);
  EXPECT_GT(after.at("accuracy").get<double>(), mid.at("accuracy").get<double>());
  EXPECT_GE(after.at("accuracy").get<double>(), before);

  // Same label again: labels unchanged, counter still advances.
  const auto same = json::parse(post_json("/v1/session/" + id + "/relabel", {{"superpixel", target}, {"label", fix}})->body);
  EXPECT_EQ(same.at("labels_rle"), after.at("labels_rle"));
  EXPECT_EQ(same.at("clicks").get<int>(), after.at("clicks").get<int>() + 2);

  EXPECT_EQ(post_json("/v1/session/" + id + "/relabel", {{"superpixel", 100000}, {"label", 1}})->status, 422);
  EXPECT_EQ(post_json("/v1/session/" + id + "/relabel", {{"superpixel", 0}, {"label", 9}})->status, 422);
}

TEST_F(ServiceTest, OverlayIsPngOfImageSize) {
  const auto id = upload(scene_.image);
  EXPECT_EQ(client_->Get("/v1/session/" + id + "/overlay")->status, 409);
  post_json("/v1/session/" + id + "/segment", seed_inputs());
  auto res = client_->Get("/v1/session/" + id + "/overlay?opacity=0.6");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  const auto img = decode_image(std::vector<std::uint8_t>(res->body.begin(), res->body.end()));
  EXPECT_EQ(img.width(), 120);
  EXPECT_EQ(img.height(), 90);
  EXPECT_EQ(client_->Get("/v1/session/" + id + "/overlay?opacity=2")->status, 422);
}

TEST_F(ServiceTest, GroundTruthSizeMismatchRejected) {
  const auto id = upload(scene_.image);
  const auto gt = encode_label_map(LabelField{2, 2, {1, 2, 1, 2}});
  auto res = client_->Post("/v1/session/" + id + "/groundtruth", std::string(gt.begin(), gt.end()), "image/png");
  EXPECT_EQ(res->status, 422);
}

TEST_F(ServiceTest, ConcurrentRelabelsAreSerialized) {
  const auto id = upload(scene_.image);
  const auto seg = json::parse(post_json("/v1/session/" + id + "/segment", seed_inputs()).value().body);
  const int count = seg.at("superpixels").get<int>();
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port_);
      for (int k = 0; k < 10; ++k) {
        c.Post("/v1/session/" + id + "/relabel",
               json{{"superpixel", (t * 10 + k) % count}, {"label", 1 + (t % 2)}}.dump(), "application/json");
      }
    });
  }
  for (auto& w : workers) w.join();
  const auto final = json::parse(post_json("/v1/session/" + id + "/relabel", {{"superpixel", 0}, {"label", 1}})->body);
  EXPECT_EQ(final.at("clicks").get<int>(), 41 * 2);
}
