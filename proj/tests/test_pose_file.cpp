#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "poselift/error.hpp"
#include "poselift/pose_file.hpp"
#include "support.hpp"

namespace poselift {
namespace {

namespace fs = std::filesystem;

PoseFile random_3d(std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Pose3D> poses;
  std::vector<FrameLabel> labels;
  for (std::size_t i = 0; i < frames; ++i) {
    Pose3D p{test::random_points(17, rng, 1000.0)};
    p.joints(0, 0) = 0.1;  // values that need all 17 digits
    p.joints(1, 0) = 1.0 / 3.0;
    p.joints(2, 0) = -1e-300;
    poses.push_back(p);
    labels.push_back({i % 2 ? "walk" : "sit", "S" + std::to_string(i % 3)});
  }
  return PoseFile::from_poses(SkeletonSpec::h36m17(), poses, labels);
}

// 14-joint 2D sidecar + one row, written by hand.
const char* const kSidecar2D = R"({
  "format": "poselift-poses",
  "version": 1,
  "skeleton": "h36m14",
  "joints": ["head", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow",
             "l_wrist", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle"],
  "root": 1,
  "units": "px",
  "dimensionality": 2,
  "frames": 1
})";

std::string header_2d() {
  std::string h = "activity,subject";
  const auto skeleton = SkeletonSpec::h36m14();
  for (const auto& j : skeleton.joints()) h += "," + j + "_x," + j + "_y";
  return h + "\n";
}

std::string row_2d() {
  std::string r = "greet,S9";
  for (int j = 0; j < 14; ++j) r += "," + std::to_string(100 + j) + "," + std::to_string(-j);
  return r + "\n";
}

TEST(PoseFile, HundredFrameRoundTripIsBitIdentical) {
  const PoseFile file = random_3d(100, 1);
  const auto [csv, sidecar] = format_pose_file(file);
  const PoseFile back = parse_pose_file(csv, sidecar);
  ASSERT_EQ(back.frames.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(back.frames[i], file.frames[i]);
  EXPECT_EQ(back.labels, file.labels);
  EXPECT_EQ(back.skeleton, file.skeleton);
  EXPECT_EQ(back.units, "mm");
  const auto [csv2, sidecar2] = format_pose_file(back);
  EXPECT_EQ(csv2, csv);
  EXPECT_EQ(sidecar2, sidecar);
}

TEST(PoseFile, DiskRoundTrip) {
  const PoseFile file = random_3d(5, 2);
  const fs::path dir = fs::temp_directory_path() / "poselift_pose_file_test";
  fs::create_directories(dir);
  const fs::path csv = dir / "poses.csv";
  write_pose_file(csv, file);
  EXPECT_TRUE(fs::exists(sidecar_path(csv)));
  EXPECT_EQ(sidecar_path(csv).extension(), ".json");
  const PoseFile back = read_pose_file(csv, SkeletonSpec::h36m17());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(back.frames[i], file.frames[i]);
  const auto poses = back.poses_3d();
  ASSERT_EQ(poses.size(), 5u);
  EXPECT_EQ(poses[3].joints, file.frames[3]);
  EXPECT_THROW(back.poses_2d(), Error);
  try {
    read_pose_file(csv, SkeletonSpec::h36m14());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSkeletonMismatch);
  }
  fs::remove_all(dir);
  try {
    read_pose_file(csv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(PoseFile, HandWritten2DFixture) {
  const PoseFile file = parse_pose_file(header_2d() + row_2d(), kSidecar2D);
  const auto poses = file.poses_2d();
  ASSERT_EQ(poses.size(), 1u);
  ASSERT_EQ(poses[0].joints.cols(), 14);
  EXPECT_EQ(file.skeleton.root_index(), 1u);
  EXPECT_EQ(file.labels[0], (FrameLabel{"greet", "S9"}));
  for (int j = 0; j < 14; ++j) {
    EXPECT_EQ(poses[0].joints(0, j), 100 + j);
    EXPECT_EQ(poses[0].joints(1, j), -j);
  }
  // Head first, ankle last, in the sidecar's order.
  EXPECT_EQ(file.skeleton.joints().front(), "head");
  EXPECT_EQ(poses[0].joints(0, file.skeleton.index_of("l_ankle")), 113);
  // Windows line endings and a trailing blank line are accepted.
  std::string crlf = header_2d() + row_2d();
  for (std::size_t p = crlf.find('\n'); p != std::string::npos; p = crlf.find('\n', p + 2)) {
    crlf.insert(p, "\r");
  }
  EXPECT_EQ(parse_pose_file(crlf + "\n", kSidecar2D).frames[0], file.frames[0]);
}

TEST(PoseFile, TruncatedRowNamesTheFrame) {
  const PoseFile file = random_3d(4, 3);
  auto [csv, sidecar] = format_pose_file(file);
  // Drop the last field of frame 2 (line 4).
  std::size_t start = 0;
  for (int line = 0; line < 3; ++line) start = csv.find('\n', start) + 1;
  const std::size_t end = csv.find('\n', start);
  const std::size_t comma = csv.rfind(',', end);
  csv.erase(comma, end - comma);
  try {
    parse_pose_file(csv, sidecar);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_EQ(e.frame(), 2);
    EXPECT_EQ(e.line(), 4);
    EXPECT_GT(e.column(), 1);
    EXPECT_NE(std::string(e.what()).find("frame 2"), std::string::npos) << e.what();
  }
}

TEST(PoseFile, BadNumberReportsColumn) {
  std::string row = row_2d();
  row.replace(row.find(",100,"), 5, ",1x0,");
  try {
    parse_pose_file(header_2d() + row, kSidecar2D);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.frame(), 0);
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), static_cast<long>(std::string("greet,S9,").size() + 1));
  }
  std::string nan_row = row_2d();
  nan_row.replace(nan_row.find(",100,"), 5, ",nan,");
  EXPECT_THROW(parse_pose_file(header_2d() + nan_row, kSidecar2D), ParseError);
}

TEST(PoseFile, MissingUnitsIn3D) {
  const PoseFile file = random_3d(2, 4);
  auto [csv, sidecar] = format_pose_file(file);
  const auto at = sidecar.find("\"units\"");
  sidecar.erase(at, sidecar.find('\n', at) - at + 1);
  try {
    parse_pose_file(csv, sidecar);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnitMissing);
  }
  PoseFile unitless = file;
  unitless.units.clear();
  try {
    format_pose_file(unitless);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnitMissing);
  }
}

TEST(PoseFile, StructuralErrors) {
  const std::string rows = row_2d();
  // Header disagreeing with the sidecar.
  std::string header = header_2d();
  header.replace(header.find("head_x"), 6, "nose_x");
  try {
    parse_pose_file(header + rows, kSidecar2D);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSkeletonMismatch);
  }
  // Frame count disagreeing with the sidecar.
  EXPECT_THROW(parse_pose_file(header_2d() + rows + rows, kSidecar2D), ParseError);
  EXPECT_THROW(parse_pose_file("", kSidecar2D), ParseError);
  EXPECT_THROW(parse_pose_file(header_2d() + rows, "{not json"), ParseError);
  EXPECT_THROW(parse_pose_file(header_2d() + rows, R"({"format": "other"})"), ParseError);
  // Labels cannot carry the separator.
  PoseFile f = parse_pose_file(header_2d() + rows, kSidecar2D);
  f.labels[0].activity = "a,b";
  EXPECT_THROW(format_pose_file(f), Error);
}

}  // namespace
}  // namespace poselift
