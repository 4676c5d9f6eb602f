#include "lidisco/dataio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "lidisco/detector.hpp"
#include "lidisco/error.hpp"
#include "lidisco/eval.hpp"

namespace fs = std::filesystem;

namespace lidisco {

namespace {

constexpr char kMagic[4] = {'O', 'Y', 'P', 'C'};
constexpr std::uint32_t kPointFileVersion = 1;
constexpr std::size_t kHeaderBytes = 12;
constexpr std::size_t kRecordBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

double get_f32(const std::string& in, std::size_t off) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, off)));
}

std::string frame_file_name(std::uint64_t frame_id) {
  std::ostringstream os;
  os << "frames/" << std::setw(6) << std::setfill('0') << frame_id << ".oypc";
  return os.str();
}

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::MalformedRecord, where + ": " + what);
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedRecord, path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const fs::path& path) { write_text_file(path, j.dump(2) + "\n"); }

void write_point_file(const fs::path& path, const PointCloud& cloud) {
  std::string buf;
  buf.reserve(kHeaderBytes + kRecordBytes * cloud.points.size());
  buf.append(kMagic, 4);
  put_u32(buf, kPointFileVersion);
  put_u32(buf, static_cast<std::uint32_t>(cloud.points.size()));
  for (const auto& p : cloud.points) {
    put_f32(buf, p.x);
    put_f32(buf, p.y);
    put_f32(buf, p.z);
    put_f32(buf, p.intensity);
  }
  write_text_file(path, buf);
}

PointCloud read_point_file(const fs::path& path) {
  const std::string buf = read_text_file(path);
  const std::string where = path.string();
  if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw Error(ErrorKind::MalformedHeader, where + ": bad magic");
  const std::uint32_t version = get_u32(buf, 4);
  if (version != kPointFileVersion)
    throw Error(ErrorKind::MalformedHeader, where + ": unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32(buf, 8);
  const std::size_t payload = buf.size() - kHeaderBytes;
  if (payload != static_cast<std::size_t>(count) * kRecordBytes)
    throw Error(ErrorKind::MalformedHeader, where + ": header declares " + std::to_string(count) +
                                                " points but file holds " + std::to_string(payload) + " bytes of records");
  PointCloud cloud;
  cloud.points.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t off = kHeaderBytes + kRecordBytes * i;
    cloud.points[i] = {get_f32(buf, off), get_f32(buf, off + 4), get_f32(buf, off + 8), get_f32(buf, off + 12)};
  }
  return cloud;
}

Json manifest_to_json(const SequenceManifest& m) {
  Json j;
  j["sequence_id"] = m.sequence_id;
  j["frame_count"] = m.frames.size();
  Json frames = Json::array();
  for (const auto& f : m.frames) {
    Json fj;
    fj["frame_id"] = f.frame_id;
    fj["timestamp_s"] = f.timestamp_s;
    fj["point_file"] = f.point_file;
    const auto mat = f.pose.to_matrix();
    fj["pose"] = std::vector<double>(mat.begin(), mat.end());
    frames.push_back(std::move(fj));
  }
  j["frames"] = std::move(frames);
  return j;
}

SequenceManifest manifest_from_json(const Json& j, const std::string& where) {
  SequenceManifest m;
  try {
    m.sequence_id = j.at("sequence_id").get<std::string>();
    const auto count = j.at("frame_count").get<std::uint64_t>();
    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.size() != count)
      malformed(where, "frame_count " + std::to_string(count) + " does not match frames list");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& fj = frames[i];
      ManifestFrame f;
      f.frame_id = fj.at("frame_id").get<std::uint64_t>();
      f.timestamp_s = fj.at("timestamp_s").get<double>();
      f.point_file = fj.at("point_file").get<std::string>();
      const auto pose = fj.at("pose").get<std::vector<double>>();
      if (pose.size() != 16) throw Error(ErrorKind::InvalidPose, where + ": frame " + std::to_string(i) + " pose needs 16 values");
      std::array<double, 16> mat{};
      std::copy(pose.begin(), pose.end(), mat.begin());
      f.pose = Pose::from_matrix(mat);
      if (!f.pose.is_valid())
        throw Error(ErrorKind::InvalidPose, where + ": frame " + std::to_string(i) + " rotation is not orthonormal");
      if (f.frame_id != i) malformed(where, "frame ids must be contiguous from 0 (entry " + std::to_string(i) + ")");
      if (!m.frames.empty() && !(f.timestamp_s > m.frames.back().timestamp_s))
        throw Error(ErrorKind::NonMonotonicTimestamps, where + ": frame " + std::to_string(i));
      m.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(where, e.what());
  }
  return m;
}

fs::path write_sequence(const fs::path& dir, const Sequence& seq) {
  SequenceManifest m;
  m.sequence_id = seq.sequence_id;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    ManifestFrame f;
    f.frame_id = seq.frames[i].frame_id;
    f.timestamp_s = seq.frames[i].timestamp;
    f.point_file = frame_file_name(f.frame_id);
    f.pose = seq.frames[i].pose;
    write_point_file(dir / f.point_file, seq.clouds[i]);
    m.frames.push_back(std::move(f));
  }
  const fs::path manifest = dir / "manifest.json";
  write_json_file(manifest_to_json(m), manifest);
  return manifest;
}

LoadedSequence read_sequence(const fs::path& manifest_path) {
  fs::path path = manifest_path;
  if (fs::is_directory(path)) path /= "manifest.json";
  LoadedSequence out;
  out.manifest = manifest_from_json(read_json_file(path), path.string());
  out.sequence.sequence_id = out.manifest.sequence_id;
  const fs::path base = path.parent_path();
  for (const auto& f : out.manifest.frames) {
    PointCloud cloud = read_point_file(base / f.point_file);
    cloud.frame_id = f.frame_id;
    cloud.timestamp = f.timestamp_s;
    out.sequence.frames.push_back({f.frame_id, f.timestamp_s, f.pose});
    out.sequence.clouds.push_back(std::move(cloud));
  }
  return out;
}

Json box_to_json(const OrientedBox& b) {
  Json j;
  j["cx"] = b.cx;
  j["cy"] = b.cy;
  j["cz"] = b.cz;
  j["l"] = b.length;
  j["w"] = b.width;
  j["h"] = b.height;
  j["yaw"] = b.yaw;
  j["score"] = b.score;
  if (b.track_id) j["track_id"] = *b.track_id;
  return j;
}

OrientedBox box_from_json(const Json& j) {
  OrientedBox b;
  b.cx = j.at("cx").get<double>();
  b.cy = j.at("cy").get<double>();
  b.cz = j.at("cz").get<double>();
  b.length = j.at("l").get<double>();
  b.width = j.at("w").get<double>();
  b.height = j.at("h").get<double>();
  b.yaw = j.at("yaw").get<double>();
  b.score = j.at("score").get<double>();
  if (auto it = j.find("track_id"); it != j.end() && !it->is_null()) b.track_id = it->get<std::uint64_t>();
  return b;
}

std::string labels_to_jsonl(const LabelSet& labels) {
  std::string out;
  for (const auto& [frame, boxes] : labels) {
    Json j;
    j["frame_id"] = frame;
    Json arr = Json::array();
    for (const auto& b : boxes) arr.push_back(box_to_json(b));
    j["boxes"] = std::move(arr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

LabelSet labels_from_jsonl(const std::string& text, const std::string& where) {
  LabelSet out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string loc = where + ":" + std::to_string(lineno);
    try {
      const Json j = Json::parse(line);
      const auto frame = j.at("frame_id").get<std::uint64_t>();
      if (out.count(frame)) malformed(loc, "duplicate frame_id " + std::to_string(frame));
      auto& boxes = out[frame];
      std::set<std::uint64_t> ids;
      for (const auto& bj : j.at("boxes")) {
        OrientedBox b = box_from_json(bj);
        if (!is_valid(b)) malformed(loc, "invalid box");
        if (b.track_id && !ids.insert(*b.track_id).second)
          malformed(loc, "duplicate track_id " + std::to_string(*b.track_id));
        boxes.push_back(b);
      }
    } catch (const nlohmann::json::exception& e) {
      malformed(loc, e.what());
    }
  }
  return out;
}

void write_labels(const LabelSet& labels, const fs::path& path) { write_text_file(path, labels_to_jsonl(labels)); }

LabelSet read_labels(const fs::path& path) { return labels_from_jsonl(read_text_file(path), path.string()); }

Json model_to_json(const TemplateModel& model) {
  Json j;
  j["format"] = "lidisco.template_model";
  j["version"] = 1;
  j["spec"] = {{"half_extent_x", model.spec.half_extent_x},
               {"half_extent_y", model.spec.half_extent_y},
               {"cell_size", model.spec.cell_size}};
  j["num_bins"] = model.num_bins;
  j["patch_size"] = model.patch_size;
  j["threshold"] = model.threshold;
  j["nms_iou"] = model.nms_iou;
  Json bins = Json::array();
  for (const auto& b : model.bins) {
    Json bj;
    bj["yaw"] = b.yaw;
    bj["length"] = b.length;
    bj["width"] = b.width;
    bj["height"] = b.height;
    bj["contributors"] = b.contributors;
    bj["weights"] = b.weights;
    bins.push_back(std::move(bj));
  }
  j["bins"] = std::move(bins);
  return j;
}

TemplateModel model_from_json(const Json& j) {
  TemplateModel m;
  try {
    if (j.at("format").get<std::string>() != "lidisco.template_model" || j.at("version").get<int>() != 1)
      throw Error(ErrorKind::MalformedRecord, "model: unsupported format/version");
    const auto& s = j.at("spec");
    m.spec.half_extent_x = s.at("half_extent_x").get<double>();
    m.spec.half_extent_y = s.at("half_extent_y").get<double>();
    m.spec.cell_size = s.at("cell_size").get<double>();
    m.num_bins = j.at("num_bins").get<int>();
    m.patch_size = j.at("patch_size").get<int>();
    m.threshold = j.at("threshold").get<double>();
    m.nms_iou = j.at("nms_iou").get<double>();
    const std::size_t len = static_cast<std::size_t>(m.patch_size) * m.patch_size;
    for (const auto& bj : j.at("bins")) {
      TemplateBin b;
      b.yaw = bj.at("yaw").get<double>();
      b.length = bj.at("length").get<double>();
      b.width = bj.at("width").get<double>();
      b.height = bj.at("height").get<double>();
      b.contributors = bj.at("contributors").get<std::size_t>();
      b.weights = bj.at("weights").get<std::vector<double>>();
      if (b.weights.size() != len) throw Error(ErrorKind::MalformedRecord, "model: template size mismatch");
      m.bins.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("model: ") + e.what());
  }
  if (!m.spec.is_valid() || m.patch_size < 1 || m.patch_size % 2 == 0)
    throw Error(ErrorKind::MalformedRecord, "model: invalid grid spec or patch size");
  return m;
}

void write_model(const TemplateModel& model, const fs::path& path) { write_json_file(model_to_json(model), path); }

TemplateModel read_model(const fs::path& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MalformedRecord) throw Error(ErrorKind::MalformedRecord, path.string() + ": " + e.what());
    throw;
  }
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json report_to_json(const EvalReport& report) {
  Json j;
  j["format"] = "lidisco.eval_report";
  j["version"] = 1;
  j["total_gt"] = report.total_gt;
  j["total_det"] = report.total_det;
  Json per_iou = Json::array();
  for (const auto& r : report.per_iou) {
    Json rj;
    rj["iou"] = r.iou_thresh;
    rj["ap"] = r.ap.ap;
    rj["num_gt"] = r.ap.num_gt;
    rj["num_det"] = r.ap.num_det;
    rj["num_tp"] = r.ap.num_tp;
    Json curve = Json::array();
    for (const auto& p : r.ap.curve) curve.push_back({p.recall, p.precision});
    rj["pr_curve"] = std::move(curve);
    per_iou.push_back(std::move(rj));
  }
  j["per_iou"] = std::move(per_iou);
  if (report.has_dtc) {
    Json d;
    d["variant"] = report.dtc_variant;
    d["iou"] = report.dtc_iou_thresh;
    d["cap_m"] = report.cap_m;
    d["bucket_edges"] = report.bucket_edges;
    Json buckets = Json::array();
    for (const auto& b : report.buckets) {
      Json bj;
      bj["lo"] = b.lo;
      bj["hi"] = b.hi;
      bj["gt_count"] = b.gt_count;
      bj["gt_matched"] = b.gt_matched;
      bj["det_count"] = b.det_count;
      bj["det_true"] = b.det_true;
      bj["recall"] = optional_json(b.recall);
      bj["precision"] = optional_json(b.precision);
      buckets.push_back(std::move(bj));
    }
    d["buckets"] = std::move(buckets);
    d["mean_missed_dtc"] = optional_json(report.mean_missed_dtc);
    j["dtc"] = std::move(d);
  }
  return j;
}

}  // namespace lidisco
