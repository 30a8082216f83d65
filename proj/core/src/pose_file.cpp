#include "poselift/pose_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"

namespace poselift {

using nlohmann::json;

namespace {

constexpr const char* kAxes = "xyz";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::vector<std::string> column_names(const SkeletonSpec& skeleton, int dim) {
  std::vector<std::string> cols = {"activity", "subject"};
  for (const auto& j : skeleton.joints()) {
    for (int a = 0; a < dim; ++a) cols.push_back(j + "_" + kAxes[a]);
  }
  return cols;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_label(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "pose file labels may not contain ',' or newlines");
  }
}

struct Field {
  std::string_view text;
  long column;  // 1-based
};

std::vector<Field> split_row(std::string_view line) {
  std::vector<Field> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto end = comma == std::string_view::npos ? line.size() : comma;
    out.push_back({line.substr(start, end - start), static_cast<long>(start + 1)});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<Pose3D> PoseFile::poses_3d() const {
  if (dimensionality != 3) throw Error(ErrorCode::kInvalidArgument, "pose file is not 3D");
  std::vector<Pose3D> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(Pose3D{f});
  return out;
}

std::vector<Pose2D> PoseFile::poses_2d() const {
  if (dimensionality != 2) throw Error(ErrorCode::kInvalidArgument, "pose file is not 2D");
  std::vector<Pose2D> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(Pose2D{f});
  return out;
}

PoseFile PoseFile::from_poses(const SkeletonSpec& skeleton, const std::vector<Pose3D>& poses,
                              std::vector<FrameLabel> labels) {
  PoseFile file;
  file.skeleton = skeleton;
  file.dimensionality = 3;
  file.units = "mm";
  for (const auto& p : poses) file.frames.emplace_back(p.joints);
  file.labels = labels.empty() ? std::vector<FrameLabel>(poses.size()) : std::move(labels);
  return file;
}

PoseFile PoseFile::from_poses(const SkeletonSpec& skeleton, const std::vector<Pose2D>& poses,
                              std::vector<FrameLabel> labels, std::string units) {
  PoseFile file;
  file.skeleton = skeleton;
  file.dimensionality = 2;
  file.units = std::move(units);
  for (const auto& p : poses) file.frames.emplace_back(p.joints);
  file.labels = labels.empty() ? std::vector<FrameLabel>(poses.size()) : std::move(labels);
  return file;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

std::pair<std::string, std::string> format_pose_file(const PoseFile& file) {
  if (file.dimensionality != 2 && file.dimensionality != 3) {
    throw Error(ErrorCode::kInvalidArgument, "pose file dimensionality must be 2 or 3");
  }
  if (file.dimensionality == 3 && file.units.empty()) {
    throw Error(ErrorCode::kUnitMissing, "3D pose files need a units field");
  }
  if (file.labels.size() != file.frames.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pose file needs one label per frame");
  }
  const auto joints = static_cast<Eigen::Index>(file.skeleton.joint_count());
  const auto cols = column_names(file.skeleton, file.dimensionality);

  std::string csv;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) csv += ',';
    csv += cols[c];
  }
  csv += '\n';
  for (std::size_t f = 0; f < file.frames.size(); ++f) {
    const auto& m = file.frames[f];
    if (m.rows() != file.dimensionality || m.cols() != joints) {
      throw Error(ErrorCode::kSkeletonMismatch,
                  "frame " + std::to_string(f) + " does not match the skeleton layout");
    }
    check_label(file.labels[f].activity);
    check_label(file.labels[f].subject);
    csv += file.labels[f].activity;
    csv += ',';
    csv += file.labels[f].subject;
    for (Eigen::Index j = 0; j < joints; ++j) {
      for (Eigen::Index a = 0; a < m.rows(); ++a) {
        csv += ',';
        csv += format_double(m(a, j));
      }
    }
    csv += '\n';
  }

  json sidecar = {
      {"format", "poselift-poses"},
      {"version", PoseFile::kVersion},
      {"skeleton", file.skeleton.name()},
      {"joints", file.skeleton.joints()},
      {"root", file.skeleton.root_index()},
      {"units", file.units},
      {"dimensionality", file.dimensionality},
      {"frames", file.frames.size()},
  };
  return {csv, sidecar.dump(2) + "\n"};
}

void write_pose_file(const std::filesystem::path& csv, const PoseFile& file) {
  const auto [csv_text, sidecar_text] = format_pose_file(file);
  write_file(csv, csv_text);
  write_file(sidecar_path(csv), sidecar_text);
}

PoseFile parse_pose_file(const std::string& csv_text, const std::string& sidecar_text,
                         const std::optional<SkeletonSpec>& expected) {
  json sidecar;
  try {
    sidecar = json::parse(sidecar_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("sidecar: ") + e.what(), 1, static_cast<long>(e.byte));
  }

  PoseFile file;
  std::size_t declared_frames = 0;
  try {
    if (sidecar.value("format", "") != "poselift-poses") {
      throw ParseError("sidecar: not a poselift pose file", 1, 1);
    }
    if (sidecar.at("version").get<int>() != PoseFile::kVersion) {
      throw ParseError("sidecar: unsupported version", 1, 1);
    }
    file.skeleton = SkeletonSpec(sidecar.at("skeleton").get<std::string>(),
                                 sidecar.at("joints").get<std::vector<std::string>>(),
                                 sidecar.at("root").get<std::size_t>());
    file.dimensionality = sidecar.at("dimensionality").get<int>();
    file.units = sidecar.value("units", "");
    declared_frames = sidecar.at("frames").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("sidecar: ") + e.what(), 1, 1);
  }
  if (file.dimensionality != 2 && file.dimensionality != 3) {
    throw ParseError("sidecar: dimensionality must be 2 or 3", 1, 1);
  }
  if (file.dimensionality == 3 && file.units.empty()) {
    throw Error(ErrorCode::kUnitMissing, "3D pose file sidecar has no units field");
  }
  if (expected && (expected->joints() != file.skeleton.joints() ||
                   expected->root_index() != file.skeleton.root_index())) {
    throw Error(ErrorCode::kSkeletonMismatch, "pose file skeleton '" + file.skeleton.name() +
                                                  "' does not match expected '" +
                                                  expected->name() + "'");
  }

  const auto cols = column_names(file.skeleton, file.dimensionality);
  const auto joints = static_cast<Eigen::Index>(file.skeleton.joint_count());
  std::string_view text(csv_text);
  long line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto fields = split_row(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != cols.size()) {
        throw Error(ErrorCode::kSkeletonMismatch,
                    "csv header has " + std::to_string(fields.size()) + " columns, skeleton '" +
                        file.skeleton.name() + "' needs " + std::to_string(cols.size()));
      }
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (fields[c].text != cols[c]) {
          throw Error(ErrorCode::kSkeletonMismatch,
                      "csv column " + std::to_string(c + 1) + " is '" +
                          std::string(fields[c].text) + "', expected '" + cols[c] + "'");
        }
      }
      continue;
    }

    const auto frame = static_cast<long>(file.frames.size());
    if (fields.size() != cols.size()) {
      const long col = fields.back().column + static_cast<long>(fields.back().text.size());
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(cols.size()),
                       line_no, col, frame);
    }
    Eigen::MatrixXd m(file.dimensionality, joints);
    for (Eigen::Index j = 0; j < joints; ++j) {
      for (Eigen::Index a = 0; a < file.dimensionality; ++a) {
        const Field& f = fields[static_cast<std::size_t>(2 + j * file.dimensionality + a)];
        double v = 0.0;
        const char* begin = f.text.data();
        const char* end = begin + f.text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr != end || f.text.empty() || !std::isfinite(v)) {
          throw ParseError("invalid number '" + std::string(f.text) + "'", line_no, f.column,
                           frame);
        }
        m(a, j) = v;
      }
    }
    file.frames.push_back(std::move(m));
    file.labels.push_back({std::string(fields[0].text), std::string(fields[1].text)});
  }
  if (!header_seen) throw ParseError("csv is empty", 1, 1);
  if (file.frames.size() != declared_frames) {
    throw ParseError("sidecar declares " + std::to_string(declared_frames) + " frames, csv has " +
                         std::to_string(file.frames.size()),
                     line_no, 1, static_cast<long>(file.frames.size()));
  }
  return file;
}

PoseFile read_pose_file(const std::filesystem::path& csv,
                        const std::optional<SkeletonSpec>& expected) {
  return parse_pose_file(read_file(csv), read_file(sidecar_path(csv)), expected);
}

}  // namespace poselift
