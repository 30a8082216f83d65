#include "poselift/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>

#include "poselift/error.hpp"

namespace poselift {

Alignment procrustes_align(const Points3& est, const Points3& gt) {
  if (est.cols() != gt.cols()) {
    throw Error(ErrorCode::kJointCountMismatch, "procrustes_align: joint counts differ");
  }
  if (est.cols() < 3) {
    throw Error(ErrorCode::kDegenerateConfiguration, "procrustes_align: need at least 3 joints");
  }
  const Eigen::Vector3d mu_est = est.rowwise().mean();
  const Eigen::Vector3d mu_gt = gt.rowwise().mean();
  const Points3 a = est.colwise() - mu_est;
  const Points3 b = gt.colwise() - mu_gt;
  if (a.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "procrustes_align: estimated joints all coincide");
  }
  const Eigen::Matrix3d cov = b * a.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;

  Alignment out;
  out.transform.rotation = svd.matrixU() * s * svd.matrixV().transpose();
  out.transform.translation = mu_gt - out.transform.rotation * mu_est;
  out.aligned = out.transform.apply(est);
  return out;
}

double pose_error_rigid(const Points3& est, const Points3& gt) {
  const Alignment a = procrustes_align(est, gt);
  return (a.aligned - gt).colwise().norm().mean();
}

double pose_error_root_centered(const Points3& est, const Points3& gt, std::size_t root) {
  if (est.cols() != gt.cols()) {
    throw Error(ErrorCode::kJointCountMismatch, "pose_error_root_centered: joint counts differ");
  }
  if (root >= static_cast<std::size_t>(est.cols())) {
    throw Error(ErrorCode::kJointCountMismatch, "pose_error_root_centered: root out of range");
  }
  const auto r = static_cast<Eigen::Index>(root);
  const Points3 a = est.colwise() - est.col(r);
  const Points3 b = gt.colwise() - gt.col(r);
  return (a - b).colwise().norm().mean();
}

std::string to_string(Protocol p) {
  return p == Protocol::kRigidAligned ? "rigid" : "root";
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "rigid") return Protocol::kRigidAligned;
  if (s == "root") return Protocol::kRootCentered;
  throw Error(ErrorCode::kInvalidArgument, "unknown protocol '" + s + "' (expected rigid|root)");
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

GroupStats stats_of(const std::vector<double>& v) {
  GroupStats s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.median = median(v);
  return s;
}

}  // namespace

EvalReport aggregate(std::span<const double> errors, std::span<const std::string> group_keys,
                     Protocol protocol) {
  if (!group_keys.empty() && group_keys.size() != errors.size()) {
    throw Error(ErrorCode::kInvalidArgument, "aggregate: group keys and errors differ in length");
  }
  EvalReport report;
  report.protocol = protocol;
  report.errors.assign(errors.begin(), errors.end());
  report.group_keys.assign(group_keys.begin(), group_keys.end());
  report.overall = stats_of(report.errors);

  std::map<std::string, std::vector<double>> grouped;
  for (std::size_t i = 0; i < group_keys.size(); ++i) grouped[group_keys[i]].push_back(errors[i]);
  for (const auto& [key, values] : grouped) report.groups[key] = stats_of(values);

  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const int steps = static_cast<int>(std::lround(kCurveMaxMm / kCurveStepMm));
  for (int i = 0; i <= steps; ++i) {
    const double t = i * kCurveStepMm;
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    report.curve.push_back(
        {t, sorted.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(sorted.size())});
  }
  return report;
}

std::string format_report_table(const EvalReport& report) {
  std::size_t width = 5;
  for (const auto& [key, _] : report.groups) width = std::max(width, key.size());
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "protocol: %s\n", to_string(report.protocol).c_str());
  out += line;
  std::snprintf(line, sizeof(line), "%-*s %8s %12s %12s\n", static_cast<int>(width), "group",
                "frames", "mean_mm", "median_mm");
  out += line;
  auto row = [&](const std::string& name, const GroupStats& s) {
    std::snprintf(line, sizeof(line), "%-*s %8zu %12.2f %12.2f\n", static_cast<int>(width),
                  name.c_str(), s.count, s.mean, s.median);
    out += line;
  };
  for (const auto& [key, s] : report.groups) row(key, s);
  row("All", report.overall);
  if (report.failed > 0) {
    std::snprintf(line, sizeof(line), "failed frames: %zu\n", report.failed);
    out += line;
  }
  return out;
}

}  // namespace poselift
