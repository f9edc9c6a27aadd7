#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bodyid/aggregation.hpp"
#include "bodyid/body_model.hpp"
#include "bodyid/embedding.hpp"
#include "bodyid/error.hpp"
#include "bodyid/eval.hpp"
#include "bodyid/fitter.hpp"
#include "bodyid/serialize.hpp"
#include "bodyid/synth.hpp"

namespace bodyid {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json vec_to_json(const VecX& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline VecX vec_from_json(const Json& arr) {
  VecX v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

template <typename Mat>
inline Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatX mat_from_json(const Json& rows) {
  if (rows.empty()) return MatX();
  MatX m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(m.cols()))
      throw IoError("ragged matrix in JSON");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
  }
  return m;
}

template <typename Mat>
inline void append_matrix_g17(std::string& out, const Mat& m) {
  out += "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += ",";
    out += "[";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ",";
      out += fmt_g17(m(r, c));
    }
    out += "]";
  }
  out += "]";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BodyModel: versioned JSON with canonical field order and 17-significant-
// digit decimals. Loading re-synthesizes the model from the recorded seed and
// dimensions, then verifies the stored arrays match exactly, so a file can
// never silently disagree with the generator.
// ---------------------------------------------------------------------------

inline constexpr const char* kModelVersion = "bodyid/model/v1";

inline std::string model_to_json_text(const BodyModel& model) {
  std::string out;
  out.reserve(1 << 20);
  out += "{\"version\":\"";
  out += kModelVersion;
  out += "\",\"seed\":";
  out += std::to_string(model.seed);
  out += ",\"parents\":[";
  for (std::size_t j = 0; j < model.tree.parents.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(model.tree.parents[j]);
  }
  out += "],\"rest_dirs\":";
  detail::append_matrix_g17(out, model.tree.rest_dirs);
  out += ",\"template\":";
  detail::append_matrix_g17(out, model.template_vertices);
  out += ",\"shape_basis\":";
  detail::append_matrix_g17(out, model.shape_basis);
  out += ",\"skin_weights\":";
  detail::append_matrix_g17(out, model.skin_weights);
  out += "}\n";
  return out;
}

inline BodyModel model_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("model JSON parse failure: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<std::string>() != kModelVersion)
    throw IoError("model JSON: unsupported version");
  const auto seed = j.at("seed").get<std::uint64_t>();
  ModelConfig cfg;
  cfg.joints = static_cast<int>(j.at("parents").size());
  const MatX tmpl = detail::mat_from_json(j.at("template"));
  const MatX basis = detail::mat_from_json(j.at("shape_basis"));
  cfg.vertices = static_cast<int>(tmpl.rows());
  cfg.shape_dims = static_cast<int>(basis.cols());

  BodyModel model = synthesize_model(seed, cfg);
  const MatX dirs = detail::mat_from_json(j.at("rest_dirs"));
  const MatX skin = detail::mat_from_json(j.at("skin_weights"));
  std::vector<int> parents;
  for (const auto& p : j.at("parents")) parents.push_back(p.get<int>());
  const bool consistent = parents == model.tree.parents &&
                          dirs.rows() == model.tree.rest_dirs.rows() &&
                          dirs == MatX(model.tree.rest_dirs) &&
                          tmpl == MatX(model.template_vertices) && basis == model.shape_basis &&
                          skin == model.skin_weights;
  if (!consistent)
    throw IoError("model JSON: stored arrays do not match the seeded generator output");
  return model;
}

inline void save_model(const BodyModel& model, const std::string& path) {
  write_text_file(path, model_to_json_text(model));
}

inline BodyModel load_model(const std::string& path) {
  return model_from_json_text(read_text_file(path));
}

// ---------------------------------------------------------------------------
// FeatureSet JSON: {cfg:{n_yaw}, bins:[{idx, occupancy, feature[]}]}
// ---------------------------------------------------------------------------

inline Json feature_set_to_json(const FeatureSet& fs) {
  Json j;
  j["cfg"] = Json{{"n_yaw", fs.n_yaw}};
  Json bins = Json::array();
  for (int b = 0; b < fs.n_yaw; ++b) {
    if (fs.occupancy[b] == 0) continue;
    Json bin;
    bin["idx"] = b;
    bin["occupancy"] = fs.occupancy[b];
    bin["feature"] = detail::vec_to_json(fs.features[b]);
    bins.push_back(std::move(bin));
  }
  j["bins"] = std::move(bins);
  return j;
}

inline FeatureSet feature_set_from_json(const Json& j) {
  ViewBinConfig cfg{j.at("cfg").at("n_yaw").get<int>()};
  FeatureSet fs = FeatureSet::empty(cfg);
  for (const auto& bin : j.at("bins")) {
    const int idx = bin.at("idx").get<int>();
    if (idx < 0 || idx >= fs.n_yaw) throw IoError("feature set JSON: bin index out of range");
    fs.occupancy[idx] = bin.at("occupancy").get<long long>();
    fs.features[idx] = detail::vec_from_json(bin.at("feature"));
    if (fs.occupancy[idx] <= 0) throw IoError("feature set JSON: listed bin with no occupancy");
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Embedding head JSON: {version, w, class_w, cfg}
// ---------------------------------------------------------------------------

inline constexpr const char* kHeadVersion = "bodyid/head/v1";

inline Json head_to_json(const EmbeddingHead& head) {
  Json j;
  j["version"] = kHeadVersion;
  j["w"] = detail::mat_to_json(head.weight);
  j["class_w"] = detail::mat_to_json(head.class_weights);
  j["cfg"] = Json{{"embed_dim", head.config.embed_dim}, {"epochs", head.config.epochs},
                  {"lr", head.config.lr},               {"seed", head.config.seed},
                  {"arc_scale", head.config.arc_scale}, {"arc_margin", head.config.arc_margin}};
  j["initial_loss"] = head.initial_loss;
  j["final_loss"] = head.final_loss;
  return j;
}

inline EmbeddingHead head_from_json(const Json& j) {
  if (!j.contains("version") || j["version"].get<std::string>() != kHeadVersion)
    throw IoError("head JSON: unsupported version");
  EmbeddingHead head;
  head.weight = detail::mat_from_json(j.at("w"));
  head.class_weights = detail::mat_from_json(j.at("class_w"));
  const auto& cfg = j.at("cfg");
  head.config.embed_dim = cfg.at("embed_dim").get<int>();
  head.config.epochs = cfg.at("epochs").get<int>();
  head.config.lr = cfg.at("lr").get<double>();
  head.config.seed = cfg.at("seed").get<std::uint64_t>();
  head.config.arc_scale = cfg.at("arc_scale").get<double>();
  head.config.arc_margin = cfg.at("arc_margin").get<double>();
  head.initial_loss = j.value("initial_loss", 0.0);
  head.final_loss = j.value("final_loss", 0.0);
  return head;
}

inline void save_head(const EmbeddingHead& head, const std::string& path) {
  write_text_file(path, head_to_json(head).dump(2) + "\n");
}

inline EmbeddingHead load_head(const std::string& path) {
  return head_from_json(Json::parse(read_text_file(path)));
}

// ---------------------------------------------------------------------------
// Fit records: NDJSON, one subsequence per line.
// ---------------------------------------------------------------------------

struct FitRecord {
  int subject = 0;
  std::string sequence_id;
  int window_begin = 0;
  int window_end = 0;
  VecX beta_mean;
  ViewAngles median_view;
  double loss_total = 0.0;
  double loss_chamfer = 0.0;
  double loss_keypoint = 0.0;
  double loss_consistency = 0.0;
  std::string condition;
  int clothing = 0;
  double pitch = 0.0;  // spec pitch of the source sequence
};

inline Json fit_record_to_json(const FitRecord& rec) {
  Json j;
  j["subject_id"] = rec.subject;
  j["sequence_id"] = rec.sequence_id;
  j["window"] = Json::array({rec.window_begin, rec.window_end});
  j["beta_mean"] = detail::vec_to_json(rec.beta_mean);
  j["median_view"] = Json{{"yaw", rec.median_view.yaw},
                          {"pitch", rec.median_view.pitch},
                          {"roll", rec.median_view.roll}};
  j["losses"] = Json{{"total", rec.loss_total},
                     {"chamfer", rec.loss_chamfer},
                     {"keypoint", rec.loss_keypoint},
                     {"consistency", rec.loss_consistency}};
  j["condition"] = rec.condition;
  j["clothing"] = rec.clothing;
  j["pitch"] = rec.pitch;
  return j;
}

inline FitRecord fit_record_from_json(const Json& j) {
  FitRecord rec;
  rec.subject = j.at("subject_id").get<int>();
  rec.sequence_id = j.at("sequence_id").get<std::string>();
  rec.window_begin = j.at("window")[0].get<int>();
  rec.window_end = j.at("window")[1].get<int>();
  rec.beta_mean = detail::vec_from_json(j.at("beta_mean"));
  rec.median_view.yaw = j.at("median_view").at("yaw").get<double>();
  rec.median_view.pitch = j.at("median_view").at("pitch").get<double>();
  rec.median_view.roll = j.at("median_view").at("roll").get<double>();
  rec.loss_total = j.at("losses").at("total").get<double>();
  rec.loss_chamfer = j.at("losses").at("chamfer").get<double>();
  rec.loss_keypoint = j.at("losses").at("keypoint").get<double>();
  rec.loss_consistency = j.at("losses").at("consistency").get<double>();
  rec.condition = j.value("condition", std::string());
  rec.clothing = j.value("clothing", 0);
  rec.pitch = j.value("pitch", 0.0);
  return rec;
}

inline FitRecord make_fit_record(const SubsequenceFit& fit, int subject,
                                 const std::string& sequence_id, int window_begin,
                                 int window_end) {
  FitRecord rec;
  rec.subject = subject;
  rec.sequence_id = sequence_id;
  rec.window_begin = window_begin;
  rec.window_end = window_end;
  rec.beta_mean = fit.feature;
  rec.median_view = fit.median_view;
  rec.loss_total = fit.total_loss;
  rec.loss_consistency = fit.consistency_loss;
  for (const auto& fr : fit.frames) {
    rec.loss_chamfer += fr.losses.chamfer;
    rec.loss_keypoint += fr.losses.keypoint;
  }
  return rec;
}

inline std::vector<FitRecord> load_fit_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<FitRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(fit_record_from_json(Json::parse(line)));
  }
  if (out.empty()) throw DataError("no fit records in " + path);
  return out;
}

// ---------------------------------------------------------------------------
// Eval report: report.json plus cmc.csv / roc.csv.
// ---------------------------------------------------------------------------

inline Json report_to_json(const EvalReport& report) {
  Json j;
  j["version"] = "bodyid/report/v1";
  j["counts"] = Json{{"probes", report.counts.probes},
                     {"gallery", report.counts.gallery},
                     {"counted", report.counts.counted},
                     {"confusers", report.counts.confusers},
                     {"genuine_pairs", report.counts.genuine_pairs},
                     {"impostor_pairs", report.counts.impostor_pairs}};
  Json ranks = Json::array();
  for (const auto& [rank, acc] : report.rank_accuracy)
    ranks.push_back(Json{{"rank", rank}, {"accuracy", acc}});
  j["rank_accuracy"] = std::move(ranks);
  Json tars = Json::array();
  for (const auto& [far, tar] : report.tar_far)
    tars.push_back(Json{{"far", far}, {"tar", tar}});
  j["tar_at_far"] = std::move(tars);
  Json cmc_arr = Json::array();
  for (double a : report.cmc_accuracy) cmc_arr.push_back(a);
  j["cmc"] = std::move(cmc_arr);
  Json roc_arr = Json::array();
  for (const auto& [far, tar] : report.roc) roc_arr.push_back(Json::array({far, tar}));
  j["roc"] = std::move(roc_arr);
  return j;
}

inline EvalReport report_from_json(const Json& j) {
  EvalReport report;
  for (const auto& r : j.at("rank_accuracy"))
    report.rank_accuracy.emplace_back(r.at("rank").get<int>(), r.at("accuracy").get<double>());
  for (const auto& t : j.at("tar_at_far"))
    report.tar_far.emplace_back(t.at("far").get<double>(), t.at("tar").get<double>());
  for (const auto& a : j.at("cmc")) report.cmc_accuracy.push_back(a.get<double>());
  for (const auto& p : j.at("roc"))
    report.roc.emplace_back(p[0].get<double>(), p[1].get<double>());
  const auto& c = j.at("counts");
  report.counts.probes = c.at("probes").get<int>();
  report.counts.gallery = c.at("gallery").get<int>();
  report.counts.counted = c.at("counted").get<int>();
  report.counts.confusers = c.at("confusers").get<int>();
  report.counts.genuine_pairs = c.at("genuine_pairs").get<long long>();
  report.counts.impostor_pairs = c.at("impostor_pairs").get<long long>();
  return report;
}

inline void write_cmc_csv(const EvalReport& report, const std::string& path) {
  std::string out = "rank,accuracy\n";
  for (std::size_t k = 0; k < report.cmc_accuracy.size(); ++k)
    out += std::to_string(k + 1) + "," + fmt_g17(report.cmc_accuracy[k]) + "\n";
  write_text_file(path, out);
}

inline void write_roc_csv(const EvalReport& report, const std::string& path) {
  std::string out = "far,tar\n";
  for (const auto& [far, tar] : report.roc) out += fmt_g17(far) + "," + fmt_g17(tar) + "\n";
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Gallery / probe feature-set files and the protocol manifest.
// ---------------------------------------------------------------------------

inline Json gallery_to_json(const std::vector<GalleryEntry>& gallery, int n_yaw,
                            const std::string& agg) {
  Json j;
  j["version"] = "bodyid/gallery/v1";
  j["cfg"] = Json{{"n_yaw", n_yaw}};
  j["agg"] = agg;
  Json subjects = Json::array();
  for (const auto& g : gallery)
    subjects.push_back(Json{{"id", g.subject}, {"featureset", feature_set_to_json(g.features)}});
  j["subjects"] = std::move(subjects);
  return j;
}

inline std::vector<GalleryEntry> gallery_from_json(const Json& j) {
  std::vector<GalleryEntry> out;
  for (const auto& s : j.at("subjects"))
    out.push_back({s.at("id").get<std::string>(), feature_set_from_json(s.at("featureset"))});
  return out;
}

inline Json probes_to_json(const std::vector<ProbeEntry>& probes, int n_yaw,
                           const std::string& agg) {
  Json j;
  j["version"] = "bodyid/probes/v1";
  j["cfg"] = Json{{"n_yaw", n_yaw}};
  j["agg"] = agg;
  Json arr = Json::array();
  for (const auto& p : probes)
    arr.push_back(Json{{"id", p.id},
                       {"subject", p.subject},
                       {"featureset", feature_set_to_json(p.features)}});
  j["probes"] = std::move(arr);
  return j;
}

inline std::vector<ProbeEntry> probes_from_json(const Json& j) {
  std::vector<ProbeEntry> out;
  for (const auto& p : j.at("probes"))
    out.push_back({p.at("id").get<std::string>(), p.at("subject").get<std::string>(),
                   feature_set_from_json(p.at("featureset"))});
  return out;
}

// Protocol manifest listing feature-set files per subject / probe:
// {gallery:[{subject, file}], probes:[{id, subject, file}]}. Relative paths
// resolve against the manifest's directory.
inline Protocol load_protocol_manifest(const std::string& path) {
  const Json j = Json::parse(read_text_file(path));
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& file) {
    const std::filesystem::path p(file);
    return p.is_absolute() ? p.string() : (base / p).string();
  };
  Protocol protocol;
  for (const auto& g : j.at("gallery")) {
    GalleryEntry entry;
    entry.subject = g.at("subject").get<std::string>();
    entry.features = feature_set_from_json(Json::parse(read_text_file(resolve(g.at("file")))));
    protocol.gallery.push_back(std::move(entry));
  }
  for (const auto& p : j.at("probes")) {
    ProbeEntry entry;
    entry.id = p.at("id").get<std::string>();
    entry.subject = p.at("subject").get<std::string>();
    entry.features = feature_set_from_json(Json::parse(read_text_file(resolve(p.at("file")))));
    protocol.probes.push_back(std::move(entry));
  }
  return protocol;
}

// ---------------------------------------------------------------------------
// Synth dataset: manifest.json plus one NDJSON file of frames per sequence
// (schema synth/v1).
// ---------------------------------------------------------------------------

inline Json sequence_spec_to_json(const SequenceSpec& spec) {
  Json j;
  j["subject"] = spec.subject;
  j["clothing"] = spec.clothing;
  j["frames"] = spec.frame_count;
  const char* kind = spec.yaw.kind == YawKind::constant ? "constant"
                     : spec.yaw.kind == YawKind::sweep  ? "sweep"
                                                        : "random_walk";
  j["yaw"] = Json{{"kind", kind},
                  {"start", spec.yaw.start},
                  {"end", spec.yaw.end},
                  {"step_sigma", spec.yaw.step_sigma}};
  j["pitch"] = spec.pitch;
  j["s"] = spec.s;
  j["sigma_kp"] = spec.sigma_kp;
  j["seed"] = spec.seed;
  j["cloud_points"] = spec.cloud_points;
  j["sigma0"] = spec.sigma0;
  j["pose_walk_sigma"] = spec.pose_walk_sigma;
  j["pose_bound"] = spec.pose_bound;
  j["resolution"] = spec.resolution;
  j["target_height_px"] = spec.target_height_px;
  return j;
}

inline SequenceSpec sequence_spec_from_json(const Json& j) {
  SequenceSpec spec;
  spec.subject = j.at("subject").get<int>();
  spec.clothing = j.at("clothing").get<int>();
  spec.frame_count = j.at("frames").get<int>();
  const std::string kind = j.at("yaw").at("kind").get<std::string>();
  if (kind == "constant")
    spec.yaw.kind = YawKind::constant;
  else if (kind == "sweep")
    spec.yaw.kind = YawKind::sweep;
  else if (kind == "random_walk")
    spec.yaw.kind = YawKind::random_walk;
  else
    throw IoError("sequence spec: unknown yaw kind " + kind);
  spec.yaw.start = j.at("yaw").at("start").get<double>();
  spec.yaw.end = j.at("yaw").at("end").get<double>();
  spec.yaw.step_sigma = j.at("yaw").at("step_sigma").get<double>();
  spec.pitch = j.at("pitch").get<double>();
  spec.s = j.at("s").get<double>();
  spec.sigma_kp = j.at("sigma_kp").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.cloud_points = j.at("cloud_points").get<int>();
  spec.sigma0 = j.at("sigma0").get<double>();
  spec.pose_walk_sigma = j.at("pose_walk_sigma").get<double>();
  spec.pose_bound = j.at("pose_bound").get<double>();
  spec.resolution = j.at("resolution").get<int>();
  spec.target_height_px = j.at("target_height_px").get<double>();
  return spec;
}

inline Json frame_to_json(const GeneratedFrame& frame, int index) {
  Json j;
  j["frame"] = index;
  j["cloud"] = detail::mat_to_json(frame.cloud.points);
  j["keypoints"] = detail::mat_to_json(frame.keypoints);
  Json vis = Json::array();
  for (bool v : frame.visibility) vis.push_back(v);
  j["visibility"] = std::move(vis);
  Json gt;
  gt["beta"] = detail::vec_to_json(frame.ground_truth.beta.beta);
  gt["theta"] = detail::mat_to_json(frame.ground_truth.theta.theta);
  gt["camera"] = Json{{"scale", frame.ground_truth.camera.scale},
                      {"trans", Json::array({frame.ground_truth.camera.trans.x(),
                                             frame.ground_truth.camera.trans.y()})}};
  gt["view"] = Json{{"yaw", frame.ground_truth.view.yaw},
                    {"pitch", frame.ground_truth.view.pitch},
                    {"roll", frame.ground_truth.view.roll}};
  j["gt"] = std::move(gt);
  return j;
}

inline GeneratedFrame frame_from_json(const Json& j) {
  GeneratedFrame frame;
  const MatX cloud = detail::mat_from_json(j.at("cloud"));
  frame.cloud.points = cloud;
  frame.cloud.source = CloudSource::silhouette;
  frame.keypoints = detail::mat_from_json(j.at("keypoints"));
  for (const auto& v : j.at("visibility")) frame.visibility.push_back(v.get<bool>());
  const auto& gt = j.at("gt");
  frame.ground_truth.beta.beta = detail::vec_from_json(gt.at("beta"));
  frame.ground_truth.theta.theta = detail::mat_from_json(gt.at("theta"));
  frame.ground_truth.camera.scale = gt.at("camera").at("scale").get<double>();
  frame.ground_truth.camera.trans = Vec2(gt.at("camera").at("trans")[0].get<double>(),
                                         gt.at("camera").at("trans")[1].get<double>());
  frame.ground_truth.view.yaw = gt.at("view").at("yaw").get<double>();
  frame.ground_truth.view.pitch = gt.at("view").at("pitch").get<double>();
  frame.ground_truth.view.roll = gt.at("view").at("roll").get<double>();
  return frame;
}

inline void write_frames_ndjson(const std::vector<GeneratedFrame>& frames,
                                const std::string& path) {
  std::string out;
  for (std::size_t f = 0; f < frames.size(); ++f)
    out += frame_to_json(frames[f], static_cast<int>(f)).dump() + "\n";
  write_text_file(path, out);
}

inline std::vector<GeneratedFrame> read_frames_ndjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<GeneratedFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    frames.push_back(frame_from_json(Json::parse(line)));
  }
  if (frames.empty()) throw DataError("no frames in " + path);
  return frames;
}

}  // namespace bodyid
