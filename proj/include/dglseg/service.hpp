#pragma once

// Local HTTP service backing the interactive annotation UI. Sessions live in
// memory; every endpoint is under /v1 and speaks JSON unless noted.
//
//   POST /v1/session                  body: PNG/PNM bytes        -> {id,width,height,channels}
//   GET  /v1/session/{id}/superpixels                            -> {count,width,height,assignment_rle}
//   POST /v1/session/{id}/inputs      body: inputs document      -> {regions,pixels}
//   POST /v1/session/{id}/segment     body: optional inputs doc  -> summary
//   POST /v1/session/{id}/relabel     body: {superpixel,label}   -> summary
//   GET  /v1/session/{id}/overlay     ?opacity=0.5               -> PNG
//   POST /v1/session/{id}/groundtruth body: label-map PNG/PGM    -> {regions,accuracy}
//
// Inputs document:
//   {"seed": 7, "regions": [{"label": 1, "pixels": [[r,c],...],
//                            "boxes": [[r1,c1,r2,c2],...], "box_fill": 100,
//                            "seeds": [[r,c],...], "side": 50}, ...]}
// Summary:
//   {"regions": M, "superpixels": K, "labels_rle": [[label,run],...] over superpixel ids,
//    "clicks": n, "click_cost": c, "accuracy": x | null, "timing_ms": t, "stale": false}

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dglseg/error.hpp"
#include "dglseg/input_sim.hpp"
#include "dglseg/io.hpp"
#include "dglseg/metrics.hpp"
#include "dglseg/pipeline.hpp"

namespace dglseg {

struct ServiceOptions {
  SegmentConfig segment;
  std::chrono::seconds idle_timeout{30 * 60};
  int default_seed_side = 50;
};

/// Run-length encoding [[value, run], ...] of a sequence.
inline nlohmann::json run_length_encode(const std::vector<int>& values) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t k = 0; k < values.size();) {
    std::size_t run = 1;
    while (k + run < values.size() && values[k + run] == values[k]) ++run;
    out.push_back({values[k], run});
    k += run;
  }
  return out;
}

inline std::vector<int> run_length_decode(const nlohmann::json& rle) {
  std::vector<int> out;
  for (const auto& pair : rle) {
    const int v = pair.at(0).get<int>();
    const auto run = pair.at(1).get<std::size_t>();
    out.insert(out.end(), run, v);
  }
  return out;
}

class SegmentationService {
 public:
  explicit SegmentationService(ServiceOptions options = {}) : options_(std::move(options)) {
    routes();
  }

  httplib::Server& server() noexcept { return server_; }

  int bind_to_any_port(const std::string& host = "127.0.0.1") {
    return server_.bind_to_any_port(host);
  }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

  std::size_t session_count() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
  }

 private:
  struct Session {
    std::string id;
    Image image;
    SegmentConfig config;
    std::optional<SuperpixelPartition> partition;
    std::vector<PixelSet> inputs;
    std::uint64_t seed = 0;
    std::optional<SegmentationResult> result;
    bool stale = false;
    std::optional<RegionAnnotation> ground_truth;
    std::chrono::steady_clock::time_point last_access;
    mutable std::shared_mutex mutex;
  };

  using SessionPtr = std::shared_ptr<Session>;

  struct HttpError {
    int status;
    std::string kind;
    std::string message;
  };

  static int status_for(ErrorKind kind) {
    switch (kind) {
      case ErrorKind::Io: return 400;
      case ErrorKind::Configuration: return 400;
      case ErrorKind::Input: return 422;
      case ErrorKind::Domain: return 422;
      case ErrorKind::State: return 409;
    }
    return 500;
  }

  static void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        evict_idle();
        fn(req, res);
      } catch (const HttpError& e) {
        send_json(res, {{"error", e.kind}, {"message", e.message}}, e.status);
      } catch (const Error& e) {
        send_json(res, {{"error", to_string(e.kind())}, {"message", e.what()}}, status_for(e.kind()));
      } catch (const nlohmann::json::exception& e) {
        send_json(res, {{"error", "input error"}, {"message", std::string("malformed JSON: ") + e.what()}},
                  400);
      } catch (const std::exception& e) {
        send_json(res, {{"error", "internal"}, {"message", e.what()}}, 500);
      }
    };
  }

  std::string new_id() {
    std::lock_guard lock(rng_mutex_);
    std::uniform_int_distribution<std::uint64_t> u;
    std::ostringstream os;
    os << std::hex << u(id_rng_) << u(id_rng_);
    return os.str();
  }

  void evict_idle() {
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
      if (session_lock && now - it->second->last_access > options_.idle_timeout) {
        session_lock.unlock();
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }

  SessionPtr find(const httplib::Request& req) {
    const std::string id = req.path_params.at("id");
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError{404, "not found", "unknown session '" + id + "'"};
    return it->second;
  }

  static void touch(Session& s) { s.last_access = std::chrono::steady_clock::now(); }

  // Requires the session's exclusive lock.
  const SuperpixelPartition& ensure_partition(Session& s) {
    if (!s.partition) s.partition = compute_superpixels(s.image, s.config);
    return *s.partition;
  }

  std::vector<PixelSet> parse_inputs(const Session& s, const nlohmann::json& doc, std::uint64_t seed) const {
    const int width = s.image.width(), height = s.image.height();
    std::map<int, std::vector<Pixel>> by_label;
    for (const auto& region : doc.at("regions")) {
      const int label = region.at("label").get<int>();
      require(label >= 1, ErrorKind::Input, "region labels start at 1");
      auto& pixels = by_label[label];
      if (region.contains("pixels")) {
        for (const auto& p : region.at("pixels")) pixels.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
      }
      if (region.contains("boxes")) {
        const double fill = region.value("box_fill", 100.0);
        Rng rng = region_stream(seed, label);
        for (const auto& b : region.at("boxes")) {
          BoundingBox box{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
          if (box.r1 > box.r2) std::swap(box.r1, box.r2);
          if (box.c1 > box.c2) std::swap(box.c1, box.c2);
          box.r1 = std::max(0, box.r1);
          box.c1 = std::max(0, box.c1);
          box.r2 = std::min(height - 1, box.r2);
          box.c2 = std::min(width - 1, box.c2);
          require(box.r1 <= box.r2 && box.c1 <= box.c2, ErrorKind::Input, "box lies outside the image");
          auto sample = sample_fraction(box.pixels(), fill, rng);
          pixels.insert(pixels.end(), sample.begin(), sample.end());
        }
      }
      if (region.contains("seeds")) {
        const int side = region.value("side", options_.default_seed_side);
        for (const auto& sd : region.at("seeds")) {
          const Pixel centre{sd.at(0).get<int>(), sd.at(1).get<int>()};
          require(s.image.contains(centre), ErrorKind::Input, "seed lies outside the image");
          auto sq = seed_square(centre, side, width, height);
          pixels.insert(pixels.end(), sq.begin(), sq.end());
        }
      }
    }
    std::vector<int> empty;
    int non_empty = 0;
    for (const auto& [label, pixels] : by_label) {
      if (pixels.empty()) empty.push_back(label);
      else ++non_empty;
    }
    if (non_empty < 2) {
      fail(ErrorKind::Input, "segmentation needs inputs for at least 2 regions; got " +
                                 std::to_string(non_empty));
    }
    if (!empty.empty()) {
      fail(ErrorKind::Input, "region " + std::to_string(empty.front()) + " has no input pixels");
    }
    int expected = 1;
    for (const auto& [label, pixels] : by_label) {
      require(label == expected, ErrorKind::Input,
              "region labels must be 1..M without gaps; missing label " + std::to_string(expected));
      ++expected;
    }
    std::vector<PixelSet> sets;
    for (auto& [label, pixels] : by_label) {
      sets.emplace_back(label, std::move(pixels), InputSource::Manual, width, height);
    }
    return sets;
  }

  static nlohmann::json summary(const Session& s, double timing_ms) {
    const auto& r = *s.result;
    nlohmann::json out{{"regions", r.regions},
                       {"superpixels", r.partition.count()},
                       {"labels_rle", run_length_encode(r.superpixel_labels)},
                       {"clicks", r.clicks},
                       {"click_cost", r.config.click_cost},
                       {"timing_ms", timing_ms},
                       {"stale", s.stale}};
    if (s.ground_truth) {
      out["accuracy"] = pixel_accuracy(r.label_field(), s.ground_truth->label_field());
    } else {
      out["accuracy"] = nullptr;
    }
    return out;
  }

  void apply_config_params(SegmentConfig& config, const httplib::Request& req) const {
    auto number = [&](const char* key) -> std::optional<double> {
      if (!req.has_param(key)) return std::nullopt;
      try {
        return std::stod(req.get_param_value(key));
      } catch (const std::exception&) {
        fail(ErrorKind::Configuration, std::string("parameter '") + key + "' is not a number");
      }
    };
    if (auto k = number("superpixels")) config.slic.superpixels = static_cast<int>(*k);
    if (auto m = number("compactness")) config.slic.compactness = *m;
    if (auto b = number("bins")) {
      config.spec.bins_per_channel.assign(config.spec.dimensions(), static_cast<int>(*b));
    }
    if (auto c = number("click_cost")) config.click_cost = static_cast<int>(*c);
    config.spec.validate();
    require(config.slic.superpixels >= 1, ErrorKind::Configuration, "superpixels must be >= 1");
    require(config.slic.compactness > 0, ErrorKind::Configuration, "compactness must be > 0");
  }

  void routes() {
    server_.Post("/v1/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::vector<std::uint8_t> bytes(req.body.begin(), req.body.end());
      auto s = std::make_shared<Session>();
      s->image = decode_image(bytes, "uploaded image");
      s->config = options_.segment;
      if (!req.has_param("superpixels")) {
        // Default count shrinks for tiny images; an explicit request does not.
        s->config.slic.superpixels = static_cast<int>(
            std::min<std::size_t>(s->config.slic.superpixels, s->image.pixel_count()));
      }
      apply_config_params(s->config, req);
      require(static_cast<std::size_t>(s->config.slic.superpixels) <= s->image.pixel_count(),
              ErrorKind::Configuration, "more superpixels than pixels");
      s->id = new_id();
      touch(*s);
      const nlohmann::json body{{"id", s->id},
                                {"width", s->image.width()},
                                {"height", s->image.height()},
                                {"channels", s->image.channels()}};
      {
        std::lock_guard lock(sessions_mutex_);
        sessions_[s->id] = s;
      }
      send_json(res, body);
    }));

    server_.Get("/v1/session/:id/superpixels",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto s = find(req);
                  std::unique_lock lock(s->mutex);
                  touch(*s);
                  const auto& partition = ensure_partition(*s);
                  send_json(res, {{"count", partition.count()},
                                  {"width", partition.width()},
                                  {"height", partition.height()},
                                  {"assignment_rle", run_length_encode(partition.assignment())}});
                }));

    server_.Post("/v1/session/:id/inputs",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto s = find(req);
                   const auto doc = nlohmann::json::parse(req.body);
                   std::unique_lock lock(s->mutex);
                   touch(*s);
                   const std::uint64_t seed = doc.value("seed", std::uint64_t{0});
                   s->inputs = parse_inputs(*s, doc, seed);
                   s->seed = seed;
                   if (s->result) s->stale = true;
                   nlohmann::json counts = nlohmann::json::array();
                   for (const auto& set : s->inputs) counts.push_back(set.size());
                   send_json(res, {{"regions", s->inputs.size()}, {"pixels", counts}});
                 }));

    server_.Post("/v1/session/:id/segment",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto s = find(req);
                   std::unique_lock lock(s->mutex);
                   touch(*s);
                   if (!req.body.empty()) {
                     const auto doc = nlohmann::json::parse(req.body);
                     if (doc.contains("regions")) {
                       const std::uint64_t seed = doc.value("seed", std::uint64_t{0});
                       s->inputs = parse_inputs(*s, doc, seed);
                       s->seed = seed;
                     }
                   }
                   if (s->inputs.size() < 2) {
                     fail(ErrorKind::Input, "segmentation needs inputs for at least 2 regions; got " +
                                                std::to_string(s->inputs.size()));
                   }
                   const auto start = std::chrono::steady_clock::now();
                   const auto& partition = ensure_partition(*s);
                   s->result = segment(s->image, partition, s->inputs, s->config);
                   s->stale = false;
                   const double ms = std::chrono::duration<double, std::milli>(
                                         std::chrono::steady_clock::now() - start).count();
                   send_json(res, summary(*s, ms));
                 }));

    server_.Post("/v1/session/:id/relabel",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto s = find(req);
                   const auto doc = nlohmann::json::parse(req.body);
                   std::unique_lock lock(s->mutex);
                   touch(*s);
                   if (!s->result) fail(ErrorKind::State, "session has no segmentation result yet");
                   relabel_superpixel(*s->result, doc.at("superpixel").get<int>(), doc.at("label").get<int>());
                   send_json(res, summary(*s, 0.0));
                 }));

    server_.Get("/v1/session/:id/overlay",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto s = find(req);
                  std::shared_lock lock(s->mutex);
                  if (!s->result) fail(ErrorKind::State, "session has no segmentation result yet");
                  double opacity = 0.5;
                  if (req.has_param("opacity")) {
                    try {
                      opacity = std::stod(req.get_param_value("opacity"));
                    } catch (const std::exception&) {
                      fail(ErrorKind::Input, "opacity is not a number");
                    }
                  }
                  require(opacity >= 0 && opacity <= 1, ErrorKind::Input, "opacity must lie in [0,1]");
                  const auto png = encode_png(render_overlay(s->image, *s->result, opacity));
                  res.set_content(std::string(png.begin(), png.end()), "image/png");
                }));

    server_.Post("/v1/session/:id/groundtruth",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto s = find(req);
                   std::vector<std::uint8_t> bytes(req.body.begin(), req.body.end());
                   RegionAnnotation gt = decode_label_map(bytes, "uploaded ground truth");
                   std::unique_lock lock(s->mutex);
                   touch(*s);
                   require(gt.width() == s->image.width() && gt.height() == s->image.height(),
                           ErrorKind::Input, "ground truth size does not match the image");
                   s->ground_truth = std::move(gt);
                   nlohmann::json body{{"regions", s->ground_truth->regions()}, {"accuracy", nullptr}};
                   if (s->result) {
                     body["accuracy"] = pixel_accuracy(s->result->label_field(), s->ground_truth->label_field());
                   }
                   send_json(res, body);
                 }));
  }

 public:
  /// Image blended with per-label tints; superpixel boundaries drawn dark.
  static Image render_overlay(const Image& image, const SegmentationResult& result, double opacity) {
    const auto palette = label_palette(result.regions);
    Image out(image.width(), image.height(), 3);
    const auto& assignment = result.partition.assignment();
    const int w = image.width();
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
      const auto src = image.at(p);
      const auto& tint = palette[static_cast<std::size_t>(result.pixel_labels[p])];
      const std::size_t col = p % static_cast<std::size_t>(w);
      const bool edge = (col + 1 < static_cast<std::size_t>(w) && assignment[p + 1] != assignment[p]) ||
                        (p + w < assignment.size() && assignment[p + w] != assignment[p]);
      for (int ch = 0; ch < 3; ++ch) {
        const double base = image.channels() == 3 ? src[ch] : src[0];
        double v = (1.0 - opacity) * base + opacity * (tint[ch] / 255.0);
        if (edge && opacity > 0) v *= 0.4;
        out.at(p)[ch] = std::clamp(v, 0.0, 1.0);
      }
    }
    return out;
  }

 private:
  ServiceOptions options_;
  httplib::Server server_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, SessionPtr> sessions_;
  std::mutex rng_mutex_;
  std::mt19937_64 id_rng_{std::random_device{}()};
};

}  // namespace dglseg
