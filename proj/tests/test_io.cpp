#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cgd/io.hpp"
#include "test_support.hpp"

using namespace cgd;
namespace fs = std::filesystem;
namespace ts = testsupport;

namespace {

// Unique scratch directory, removed on scope exit.
struct ScratchDir {
  fs::path path;

  ScratchDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() /
           ("cgdtest_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_raw(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("format_double is shortest round-trip decimal") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 3.141592653589793, 0.0, -1024.5}) {
    const std::string s = io::format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(std::nan("")).find("nan") != std::string::npos);
}

TEST_CASE("write_text_atomic replaces content and leaves no temporary") {
  ScratchDir dir;
  const fs::path target = dir.path / "file.txt";
  io::write_text_atomic(target, "first\n");
  io::write_text_atomic(target, "second\n");
  CHECK(read_raw(target) == "second\n");
  CHECK_FALSE(fs::exists(dir.path / "file.txt.tmp"));
}

TEST_CASE("batch files round trip bitwise") {
  ScratchDir dir;
  auto rng = ts::rng_for(70);
  const DataBatch batch = ts::random_batch(3, 5, rng);
  const DataBatch tagged(batch.samples, 7);

  const fs::path file = dir.path / "batch_0007.csv";
  io::write_batch_file(file, tagged);
  const DataBatch back = io::read_batch_file(file);
  CHECK(back.t == 7);
  CHECK(back.p() == 3);
  CHECK(back.n() == 5);
  CHECK((back.samples - tagged.samples).norm() == 0.0);

  // Layout: header plus one line per sample vector.
  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header == "3,5,7");
}

TEST_CASE("theta files round trip bitwise") {
  ScratchDir dir;
  auto rng = ts::rng_for(71);
  const CGPoint theta = ts::random_point(4, 6, rng);

  const fs::path file = dir.path / "theta.theta";
  io::write_theta_file(file, theta);
  const io::ThetaFile back = io::read_theta_file(file);
  CHECK((back.sigma - theta.sigma.matrix()).norm() == 0.0);
  CHECK((back.tau - theta.tau.values()).norm() == 0.0);

  // The writer accepts scatters without unit determinant.
  const CMat scaled = 2.0 * theta.sigma.matrix();
  io::write_theta_file(file, scaled, theta.tau.values());
  CHECK((io::read_theta_file(file).sigma - scaled).norm() == 0.0);
}

TEST_CASE("batch reader reports file, line and field on malformed input") {
  ScratchDir dir;
  const fs::path file = dir.path / "batch_0001.csv";

  write_raw(file, "2,2\n1,0,0,0\n0,0,1,0\n");
  CHECK_THROWS_WITH_AS(io::read_batch_file(file),
                       doctest::Contains("header must be 'p,n,t'"), IoError);

  write_raw(file, "2,3,1\n1,0,0,0\n0,0,1,0\n");
  CHECK_THROWS_WITH_AS(io::read_batch_file(file), doctest::Contains("data rows"), IoError);

  write_raw(file, "2,2,1\n1,0,0,0\n0,oops,1,0\n");
  try {
    io::read_batch_file(file);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string what = e.what();
    CHECK(what.find(file.string() + ":3") != std::string::npos);
    CHECK(what.find("field 2") != std::string::npos);
  }

  write_raw(file, "2,2,1\n1,0,0,0\n0,inf,1,0\n");
  CHECK_THROWS_WITH_AS(io::read_batch_file(file), doctest::Contains("non-finite"), IoError);

  write_raw(file, "2,2,1\n1,0,0\n0,0,1,0\n");
  CHECK_THROWS_WITH_AS(io::read_batch_file(file), doctest::Contains("expected 4 fields"),
                       IoError);
}

TEST_CASE("theta reader validates shape") {
  ScratchDir dir;
  const fs::path file = dir.path / "theta.theta";

  write_raw(file, "2,3\n1,0,0,0\n0,0,1,0\n1,1\n");
  CHECK_THROWS_WITH_AS(io::read_theta_file(file), doctest::Contains("texture fields"),
                       IoError);

  write_raw(file, "2,3\n1,0,0,0\n1,1,1\n");
  CHECK_THROWS_WITH_AS(io::read_theta_file(file), doctest::Contains("scatter rows"), IoError);

  CHECK_THROWS_AS(io::read_theta_file(dir.path / "absent.theta"), IoError);
}

TEST_CASE("batch_file_name pads the time index") {
  CHECK(io::batch_file_name(3) == "batch_0003.csv");
  CHECK(io::batch_file_name(412) == "batch_0412.csv");
  CHECK(io::batch_file_name(12345) == "batch_12345.csv");
}

TEST_CASE("read_batch_dir sorts by header time index") {
  ScratchDir dir;
  auto rng = ts::rng_for(72);
  // File names deliberately disagree with the header order.
  io::write_batch_file(dir.path / "batch_0001.csv",
                       DataBatch(ts::random_batch(2, 3, rng).samples, 5));
  io::write_batch_file(dir.path / "batch_0002.csv",
                       DataBatch(ts::random_batch(2, 3, rng).samples, 1));
  io::write_batch_file(dir.path / "batch_0003.csv",
                       DataBatch(ts::random_batch(2, 3, rng).samples, 3));
  write_raw(dir.path / "notes.txt", "ignored\n");

  const std::vector<DataBatch> batches = io::read_batch_dir(dir.path);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].t == 1);
  CHECK(batches[1].t == 3);
  CHECK(batches[2].t == 5);
}

TEST_CASE("read_batch_dir rejects inconsistent inputs") {
  auto rng = ts::rng_for(73);
  {
    ScratchDir dir;
    io::write_batch_file(dir.path / "batch_0001.csv",
                         DataBatch(ts::random_batch(2, 3, rng).samples, 1));
    io::write_batch_file(dir.path / "batch_0002.csv",
                         DataBatch(ts::random_batch(2, 3, rng).samples, 1));
    CHECK_THROWS_WITH_AS(io::read_batch_dir(dir.path), doctest::Contains("duplicate"),
                         IoError);
  }
  {
    ScratchDir dir;
    io::write_batch_file(dir.path / "batch_0001.csv",
                         DataBatch(ts::random_batch(2, 3, rng).samples, 1));
    io::write_batch_file(dir.path / "batch_0002.csv",
                         DataBatch(ts::random_batch(3, 3, rng).samples, 2));
    CHECK_THROWS_WITH_AS(io::read_batch_dir(dir.path), doctest::Contains("(p, n)"), IoError);
  }
  {
    ScratchDir dir;
    CHECK_THROWS_WITH_AS(io::read_batch_dir(dir.path), doctest::Contains("no batch_"),
                         IoError);
    CHECK_THROWS_AS(io::read_batch_dir(dir.path / "missing"), IoError);
  }
}

TEST_CASE("write_mse_csv emits the documented columns") {
  ScratchDir dir;
  MseCurve curve;
  MseRecord rec;
  rec.T = 10;
  rec.icrb = 0.01;
  rec.mle = 0.02;
  curve.records.push_back(rec);

  const fs::path file = dir.path / "mse.csv";
  io::write_mse_csv(file, curve);
  const std::string content = read_raw(file);
  CHECK(content.find("T,icrb_db,mle_db,arithmetic_db,recursive_db\n") == 0);
  CHECK(content.find("10,-20,") != std::string::npos);
  CHECK(content.find("nan") != std::string::npos);  // estimators that were not run
}
