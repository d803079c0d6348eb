#include "annotate_http.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <regex>

#include "pipeline.hpp"
#include "weaklab/annotate_service.hpp"
#include "weaklab/error.hpp"
#include "weaklab/geometry.hpp"
#include "weaklab/io.hpp"
#include "weaklab/manifest.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>
#include <json.hpp>

namespace weaklab::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Crop {
  int camera = 0;
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;  // pixel box, inclusive-exclusive
};

struct SceneState {
  std::uint64_t seed = 0;
  fs::path scene_path;
  fs::path labels_path;
  PointMatrix points;
  AnnotationUnits units;
  std::vector<IndexList> members;
  std::vector<std::optional<Crop>> crops;
  std::unique_ptr<AnnotationSession> session;
};

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    require(fd_ >= 0, ErrorCategory::kIo, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fail(ErrorCategory::kConflict, "labels directory is locked by another annotation session");
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

int http_status(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kNotFound: return 404;
    case ErrorCategory::kConflict: return 409;
    case ErrorCategory::kData:
    case ErrorCategory::kFormat: return 422;
    default: return 500;
  }
}

HttpReply error_reply(int status, std::string_view category, const std::string& message) {
  json body = {{"error", {{"category", category}, {"message", message}}}};
  return {status, "application/json", body.dump()};
}

HttpReply json_reply(const json& body) { return {200, "application/json", body.dump()}; }

std::vector<std::optional<Crop>> cluster_crops(const PointMatrix& points, const std::vector<IndexList>& members,
                                               const std::vector<CameraModel>& cameras) {
  std::vector<std::optional<Crop>> out(members.size());
  const auto hits = project_all(points, cameras);
  std::vector<std::vector<const PixelHit*>> by_point(points.rows());
  for (const auto& h : hits) by_point[h.point_index].push_back(&h);
  for (std::size_t u = 0; u < members.size(); ++u) {
    std::vector<int> count(cameras.size(), 0);
    for (int p : members[u]) {
      for (const PixelHit* h : by_point[p]) ++count[h->camera_index];
    }
    const auto best = std::max_element(count.begin(), count.end());
    if (best == count.end() || *best == 0) continue;
    Crop crop;
    crop.camera = static_cast<int>(best - count.begin());
    double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
    for (int p : members[u]) {
      for (const PixelHit* h : by_point[p]) {
        if (h->camera_index != crop.camera) continue;
        u0 = std::min(u0, h->u);
        v0 = std::min(v0, h->v);
        u1 = std::max(u1, h->u);
        v1 = std::max(v1, h->v);
      }
    }
    const auto& cam = cameras[crop.camera];
    crop.u0 = std::clamp(static_cast<int>(std::floor(u0)), 0, cam.width - 1);
    crop.v0 = std::clamp(static_cast<int>(std::floor(v0)), 0, cam.height - 1);
    crop.u1 = std::clamp(static_cast<int>(std::floor(u1)) + 1, crop.u0 + 1, cam.width);
    crop.v1 = std::clamp(static_cast<int>(std::floor(v1)) + 1, crop.v0 + 1, cam.height);
    out[u] = crop;
  }
  return out;
}

std::string ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(img.width) * img.height * 3);
  for (Eigen::Index i = 0; i < img.rgb.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out.push_back(static_cast<char>(std::lround(std::clamp(img.rgb(i, c), 0.0, 1.0) * 255.0)));
    }
  }
  return out;
}

}  // namespace

struct AnnotateServer::Impl {
  AnnotateServerConfig config;
  std::unique_ptr<FileLock> lock;
  std::vector<std::string> class_names;
  std::map<std::uint64_t, SceneState> scenes;
  std::mutex mutex;  // single writer over every session
  httplib::Server http;

  SceneState& scene(const std::string& id);
  std::optional<int> parse_class(const json& v) const;
  LabelRequest parse_request(const std::string& body) const;
  json cluster_json(const SceneState& s, const ClusterSummary& c) const;
  std::string status_of(const SceneState& s, int cluster) const;
  void persist(const SceneState& s);

  HttpReply get_scenes();
  HttpReply get_clusters(const std::string& id);
  HttpReply get_progress();
  HttpReply get_image(const std::string& id, int camera);
  HttpReply post_labels(const std::string& id, const std::string& body);
};

SceneState& AnnotateServer::Impl::scene(const std::string& id) {
  const bool digits = !id.empty() && id.size() < 19 && std::all_of(id.begin(), id.end(), ::isdigit);
  if (digits) {
    if (auto it = scenes.find(std::stoull(id)); it != scenes.end()) return it->second;
  }
  fail(ErrorCategory::kNotFound, "unknown scene '" + id + "'");
}

std::optional<int> AnnotateServer::Impl::parse_class(const json& v) const {
  if (v.is_number_integer()) {
    const auto c = v.get<long long>();
    if (c >= 0 && c < static_cast<long long>(class_names.size())) return static_cast<int>(c);
    return std::nullopt;
  }
  if (v.is_string()) {
    const auto it = std::find(class_names.begin(), class_names.end(), v.get<std::string>());
    if (it != class_names.end()) return static_cast<int>(it - class_names.begin());
  }
  return std::nullopt;
}

LabelRequest AnnotateServer::Impl::parse_request(const std::string& body) const {
  const json j = json::parse(body, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorCategory::kData, "body must be a JSON object");
  LabelRequest req;
  require(j.contains("cluster_id") && j["cluster_id"].is_number_integer(), ErrorCategory::kData,
          "cluster_id must be an integer");
  req.cluster_id = j["cluster_id"].get<int>();
  require(j.contains("mode") && j["mode"].is_string(), ErrorCategory::kData, "mode must be \"pure\" or \"mixed\"");
  const auto mode = j["mode"].get<std::string>();
  require(mode == "pure" || mode == "mixed", ErrorCategory::kData, "mode must be \"pure\" or \"mixed\"");
  req.mode = mode == "pure" ? AnnotationMode::kPure : AnnotationMode::kMixed;
  require(j.contains("assignments") && j["assignments"].is_array(), ErrorCategory::kData,
          "assignments must be an array");
  for (const auto& a : j["assignments"]) {
    require(a.is_object() && a.contains("class"), ErrorCategory::kData, "each assignment needs a class");
    const auto cls = parse_class(a["class"]);
    require(cls.has_value(), ErrorCategory::kData, "unknown class " + a["class"].dump());
    Assignment out{*cls, std::nullopt};
    if (a.contains("point_index") && !a["point_index"].is_null()) {
      require(a["point_index"].is_number_integer(), ErrorCategory::kData, "point_index must be an integer");
      out.point_index = a["point_index"].get<int>();
    }
    req.assignments.push_back(out);
  }
  if (j.contains("request_id") && !j["request_id"].is_null()) {
    require(j["request_id"].is_string(), ErrorCategory::kData, "request_id must be a string");
    req.request_id = j["request_id"].get<std::string>();
  }
  return req;
}

std::string AnnotateServer::Impl::status_of(const SceneState& s, int cluster) const {
  int sparse = 0;
  bool labelled = false;
  const LabelSet& l = s.session->labels();
  for (int p : s.members[cluster]) {
    if (l.sparse.contains(p)) ++sparse;
    if (l.sparse.contains(p) || l.propagated.contains(p) || l.negative.contains(p)) labelled = true;
  }
  if (!labelled) return "pending";
  return sparse > 1 ? "mixed-labeled" : "pure-labeled";
}

json AnnotateServer::Impl::cluster_json(const SceneState& s, const ClusterSummary& c) const {
  json scatter = json::array();
  for (int p : c.scatter) scatter.push_back({p, s.points(p, 0), s.points(p, 1), s.points(p, 2)});
  json crop = nullptr;
  if (const auto& k = s.crops[c.id]) {
    crop = {{"camera", k->camera},
            {"u0", k->u0},
            {"v0", k->v0},
            {"u1", k->u1},
            {"v1", k->v1},
            {"image", "/api/images/" + std::to_string(s.seed) + "/" + std::to_string(k->camera)}};
  }
  return {{"id", c.id},
          {"point_count", c.point_count},
          {"bbox", {{"min_x", c.min_x}, {"min_y", c.min_y}, {"max_x", c.max_x}, {"max_y", c.max_y}}},
          {"scatter", scatter},
          {"status", status_of(s, c.id)},
          {"ground", c.ground},
          {"image_crop", crop}};
}

void AnnotateServer::Impl::persist(const SceneState& s) {
  write_label_artifact(s.labels_path, s.session->labels(), s.units);
  RunManifest m;
  if (fs::exists(config.labels / kManifestName)) {
    m = read_manifest(config.labels);
  } else {
    m.command = "serve-annotate";
  }
  write_manifest(config.labels, m);
}

HttpReply AnnotateServer::Impl::get_scenes() {
  json list = json::array();
  for (const auto& [seed, s] : scenes) {
    int done = 0;
    for (int c = 0; c < s.session->num_clusters(); ++c) done += s.session->finalized(c) ? 1 : 0;
    list.push_back({{"scene", std::to_string(seed)},
                    {"num_points", s.session->labels().num_points},
                    {"num_clusters", s.session->num_clusters()},
                    {"finalized", done}});
  }
  json classes = json::array();
  for (std::size_t c = 0; c < class_names.size(); ++c) classes.push_back({{"id", c}, {"name", class_names[c]}});
  return json_reply({{"scenes", list}, {"classes", classes}, {"readonly", config.readonly}});
}

HttpReply AnnotateServer::Impl::get_clusters(const std::string& id) {
  const SceneState& s = scene(id);
  json clusters = json::array();
  for (const auto& c : s.session->summaries()) clusters.push_back(cluster_json(s, c));
  json classes = json::array();
  for (std::size_t c = 0; c < class_names.size(); ++c) classes.push_back({{"id", c}, {"name", class_names[c]}});
  return json_reply({{"scene", std::to_string(s.seed)},
                     {"num_points", s.session->labels().num_points},
                     {"classes", classes},
                     {"clusters", clusters}});
}

HttpReply AnnotateServer::Impl::get_progress() {
  std::vector<LabelSet> sets;
  int clusters = 0, finalized = 0;
  for (const auto& [seed, s] : scenes) {
    sets.push_back(s.session->labels());
    clusters += s.session->num_clusters();
    for (int c = 0; c < s.session->num_clusters(); ++c) finalized += s.session->finalized(c) ? 1 : 0;
  }
  const LabelStatistics st = label_statistics(sets);
  return json_reply({{"scenes", scenes.size()},
                     {"clusters", clusters},
                     {"clusters_finalized", finalized},
                     {"total_points", st.total_points},
                     {"sparse", st.sparse},
                     {"propagated", st.propagated},
                     {"negative", st.negative},
                     {"pseudo", st.pseudo},
                     {"sparse_rate", st.sparse_rate()},
                     {"propagated_rate", st.propagated_rate()},
                     {"negative_rate", st.negative_rate()},
                     {"coverage", st.coverage()}});
}

HttpReply AnnotateServer::Impl::get_image(const std::string& id, int camera) {
  const SceneState& s = scene(id);
  const SceneFrame frame = read_scene(s.scene_path);
  require(camera >= 0 && camera < static_cast<int>(frame.images.size()), ErrorCategory::kNotFound,
          "unknown camera " + std::to_string(camera));
  return {200, "image/x-portable-pixmap", ppm(frame.images[camera])};
}

HttpReply AnnotateServer::Impl::post_labels(const std::string& id, const std::string& body) {
  if (config.readonly) return error_reply(403, "readonly", "server is read-only");
  SceneState& s = scene(id);
  const LabelRequest req = parse_request(body);
  const ApplyResult r = s.session->apply(req);
  if (!r.replayed) persist(s);
  return json_reply({{"cluster_id", r.cluster_id},
                     {"sparse", r.sparse},
                     {"propagated", r.propagated},
                     {"negative", r.negative},
                     {"replayed", r.replayed}});
}

AnnotateServer::AnnotateServer(AnnotateServerConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  const auto& cfg = impl_->config;
  require(fs::is_directory(cfg.labels), ErrorCategory::kIo, "not a directory: " + cfg.labels.string());
  if (!cfg.readonly) impl_->lock = std::make_unique<FileLock>(cfg.labels / ".annotate.lock");
  for (std::uint64_t seed : list_scene_seeds(cfg.scenes)) {
    const fs::path labels_path = cfg.labels / labels_file_name(seed);
    if (!fs::exists(labels_path)) continue;
    const SceneFrame frame = read_scene(cfg.scenes / scene_file_name(seed));
    if (impl_->class_names.empty()) impl_->class_names = frame.class_names;
    LabelArtifact a = read_label_artifact(labels_path);
    require(a.labels.num_points == frame.points.rows(), ErrorCategory::kData,
            labels_path.string() + " does not match its scene");
    SceneState s;
    s.seed = seed;
    s.scene_path = cfg.scenes / scene_file_name(seed);
    s.labels_path = labels_path;
    s.points = frame.points;
    s.units = a.units;
    s.members.resize(a.units.clustering.num_clusters);
    for (std::size_t i = 0; i < a.units.clustering.cluster_id.size(); ++i) {
      if (const int u = a.units.clustering.cluster_id[i]; u >= 0) s.members[u].push_back(static_cast<int>(i));
    }
    s.crops = cluster_crops(frame.points, s.members, frame.cameras);
    s.session = std::make_unique<AnnotationSession>(std::to_string(seed), frame.points, a.units.clustering,
                                                    std::move(a.labels), a.units.ground_unit);
    impl_->scenes.emplace(seed, std::move(s));
  }
  require(!impl_->scenes.empty(), ErrorCategory::kData, "no scene has a labels artifact in " + cfg.labels.string());

  if (cfg.static_dir) {
    require(impl_->http.set_mount_point("/", cfg.static_dir->string()), ErrorCategory::kIo,
            "cannot serve static files from " + cfg.static_dir->string());
  }
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->http.Get(".*", route);
  impl_->http.Post(".*", route);
  impl_->http.Put(".*", route);
  impl_->http.Delete(".*", route);
}

AnnotateServer::~AnnotateServer() { stop(); }

HttpReply AnnotateServer::handle(const std::string& method, const std::string& path, const std::string& body) {
  static const std::regex clusters(R"(/api/clusters/([^/]+))");
  static const std::regex labels(R"(/api/labels/([^/]+))");
  static const std::regex images(R"(/api/images/([^/]+)/(\d{1,4}))");
  std::lock_guard<std::mutex> guard(impl_->mutex);
  std::smatch m;
  try {
    if (method == "GET" && path == "/api/scenes") return impl_->get_scenes();
    if (method == "GET" && path == "/api/progress") return impl_->get_progress();
    if (method == "GET" && std::regex_match(path, m, clusters)) return impl_->get_clusters(m[1]);
    if (method == "GET" && std::regex_match(path, m, images)) return impl_->get_image(m[1], std::stoi(m[2]));
    if (method == "POST" && std::regex_match(path, m, labels)) return impl_->post_labels(m[1], body);
    const bool known = path == "/api/scenes" || path == "/api/progress" || std::regex_match(path, clusters) ||
                       std::regex_match(path, labels) || std::regex_match(path, images);
    if (known) return error_reply(405, "method", method + " is not allowed on " + path);
    return error_reply(404, category_name(ErrorCategory::kNotFound), "no route for " + path);
  } catch (const Error& e) {
    return error_reply(http_status(e.category()), category_name(e.category()), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

int AnnotateServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    require(bound > 0, ErrorCategory::kIo, "cannot bind to " + host);
    return bound;
  }
  require(impl_->http.bind_to_port(host, port), ErrorCategory::kIo,
          "cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

void AnnotateServer::listen() { impl_->http.listen_after_bind(); }

void AnnotateServer::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

}  // namespace weaklab::cli
