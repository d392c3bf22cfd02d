// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

#include "cmag/error.hpp"
#include "cmag/io.hpp"
#include "cmag/sensing_matrix.hpp"
#include "support.hpp"

using namespace cmag;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cmag_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  return line;
}

bool is_io(const Error& e) { return e.code() == ErrorCode::io; }

}  // namespace

TEST_CASE("format_double is shortest round trip") {
  std::mt19937_64 eng(4);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 20000) {
    const std::uint64_t b = bits(eng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    ++checked;
    REQUIRE(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("fields survive a save and load bit for bit") {
  const FieldModel models[] = {sample_spike_train(3, 1e-3, 5, 5e-6, 1.0, 10), test::fixture_field(),
                               sample_multitone(9, 4, 4096, 2e-3)};
  for (const auto& f : models) {
    const auto p = scratch("field.json");
    save_field(p.string(), f);
    const auto g = load_field(p.string());
    REQUIRE(g.index() == f.index());
    CHECK(field_to_json(g) == field_to_json(f));
    for (int N : {6, 10}) CHECK(discretize(g, N).B == discretize(f, N).B);
    const auto j = nlohmann::json::parse(field_to_json(f));
    CHECK(j.at("format_version") == kFormatVersion);
  }
}

TEST_CASE("malformed fields are rejected") {
  auto io = Catch::Matchers::Predicate<Error>(is_io);
  CHECK_THROWS_MATCHES(field_from_json("{"), Error, io);
  CHECK_THROWS_MATCHES(field_from_json("[]"), Error, io);
  auto j = nlohmann::json::parse(field_to_json(test::fixture_field()));
  auto bad = j;
  bad["format_version"] = kFormatVersion + 1;
  CHECK_THROWS_MATCHES(field_from_json(bad.dump()), Error, io);
  bad = j;
  bad["kind"] = "chirp";
  CHECK_THROWS_MATCHES(field_from_json(bad.dump()), Error, io);
  bad = j;
  bad.erase("T");
  CHECK_THROWS_MATCHES(field_from_json(bad.dump()), Error, io);
  bad = j;
  bad["T"] = -1.0;
  CHECK_THROWS_AS(field_from_json(bad.dump()), Error);
  CHECK_THROWS_MATCHES(load_field("/nonexistent/dir/field.json"), Error, io);
}

TEST_CASE("matrices survive a save and load bit for bit") {
  for (auto e : {RandomEnsemble::bernoulli, RandomEnsemble::gaussian, RandomEnsemble::sphere_columns}) {
    const auto A = random_matrix(e, 8, 17, 33).A;
    const auto p = scratch("matrix.txt");
    save_matrix(p.string(), A);
    CHECK(first_line(p) == "# cmag-matrix format-version 1");
    const auto B = load_matrix(p.string());
    REQUIRE(B.rows() == 17);
    REQUIRE(B.cols() == 33);
    CHECK((A.array() == B.array()).all());
  }
}

TEST_CASE("malformed matrices are rejected") {
  auto io = Catch::Matchers::Predicate<Error>(is_io);
  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return read_matrix(is);
  };
  CHECK(parse("# c\n2 2\n1 2\n\n# mid\n3 4\n")(1, 0) == 3.0);
  CHECK_THROWS_MATCHES(parse(""), Error, io);
  CHECK_THROWS_MATCHES(parse("2 2\n1 2 3\n"), Error, io);
  CHECK_THROWS_MATCHES(parse("1 2\n1 2 3\n"), Error, io);
  CHECK_THROWS_MATCHES(parse("1 2\n1 x\n"), Error, io);
  CHECK_THROWS_MATCHES(parse("0 2\n"), Error, io);
  CHECK_THROWS_MATCHES(load_matrix("/nonexistent/m.txt"), Error, io);
}

TEST_CASE("sweep outputs carry version headers and every record") {
  auto cfg = default_config(Scenario::walsh_spike);
  cfg.m_values = {150, 260};
  cfg.trials = 3;
  const auto res = run_sweep(cfg);

  std::ostringstream csv;
  write_sweep_csv(csv, res);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "# cmag-sweep format-version 1");
  std::getline(lines, line);
  CHECK(line == "m,trials,successes,p_suc");
  for (const auto& p : res.points) {
    std::getline(lines, line);
    CHECK(line == std::to_string(p.m) + ",3," + std::to_string(p.successes) + "," + format_double(p.p_suc));
  }

  const auto j = nlohmann::json::parse(sweep_to_json(res));
  CHECK(j.at("format") == "cmag-sweep");
  CHECK(j.at("format_version") == 1);
  CHECK(j.at("config").at("scenario") == "walsh_spike");
  REQUIRE(j.at("records").size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(j["records"][i]["seed"].get<std::uint64_t>() == res.records[i].seed);
    CHECK(j["records"][i]["success"].get<bool>() == res.records[i].success);
    CHECK_FALSE(j["records"][i].contains("wall_time"));
  }

  const auto pc = scratch("sweep.csv"), pj = scratch("sweep.json");
  save_sweep(pc.string(), res, false);
  save_sweep(pj.string(), res, true);
  CHECK(first_line(pc) == "# cmag-sweep format-version 1");
  std::ifstream js(pj);
  CHECK(nlohmann::json::parse(js) == j);
}

TEST_CASE("timing appears only on request") {
  auto cfg = default_config(Scenario::walsh_spike);
  cfg.m_values = {300};
  cfg.trials = 1;
  cfg.record_timing = true;
  const auto j = nlohmann::json::parse(sweep_to_json(run_sweep(cfg)));
  CHECK(j["records"][0].contains("wall_time"));
}

TEST_CASE("series files are two columns under a version header") {
  std::ostringstream os;
  write_series(os, {0.5, 1.5}, {-1.0, 0.25});
  CHECK(os.str() == "# cmag-series format-version 1\n# t_s value_nT\n0.5 -1\n1.5 0.25\n");
  CHECK_THROWS_AS(write_series(os, {1.0}, {}), Error);
  CHECK_THROWS_AS(save_series("/nonexistent/s.txt", {1.0}, {1.0}), Error);
}
