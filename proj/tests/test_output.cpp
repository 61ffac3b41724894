#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gibbslab/error.hpp"
#include "gibbslab/output.hpp"

using namespace gibbs;

TEST_CASE("FNV-1a reference values") {
  // Published 64-bit test vectors.
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("CSV quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(to_csv({"n", "note"}, {{"1", "x\ny"}}) == "n,note\r\n1,\"x\ny\"\r\n");
  CHECK_THROWS_AS(to_csv({"a"}, {{"1", "2"}}), Error);
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::stod(format_number(M_PI)) == M_PI);
}

TEST_CASE("plots are byte-stable and reject mismatched kinds") {
  Json doc;
  doc["command"] = "fekete";
  std::vector<double> a;
  for (int i = 0; i < 12; ++i) a.push_back(2.0 * M_PI * i / 12.0);
  doc["plots"]["points"] = {{"space", "circle"}, {"a", a}, {"b", std::vector<double>(12, 0.0)}};
  const auto first = plot_emit(doc, "points");
  CHECK(first == plot_emit(Json::parse(doc.dump()), "points"));
  // Twelve markers, none of them the legend.
  std::size_t count = 0;
  for (auto p = first.find("<circle"); p != std::string::npos; p = first.find("<circle", p + 1)) ++count;
  CHECK(count == 12);
  CHECK(first.rfind("<?xml", 0) == 0);
  CHECK_THROWS_AS(plot_emit(doc, "density"), Error);
  CHECK_THROWS_AS(plot_emit(Json::object(), "points"), Error);

  Json gaps;
  gaps["plots"]["gaps"] = {{"n", {2, 4, 8}}, {"gap", {0.5, 0.0, 0.125}}};
  const auto g = plot_emit(gaps, "gaps");
  CHECK(g.find("nonpositive values omitted") != std::string::npos);
}

TEST_CASE("run writer records every file") {
  const auto dir = std::filesystem::temp_directory_path() / "gibbslab_writer_test";
  std::filesystem::remove_all(dir);
  RunWriter w(dir.string());
  w.write("a.csv", "x\r\n1\r\n");
  w.write("b.json", "{}\n");
  w.write("a.csv", "x\r\n2\r\n");
  auto m = w.manifest("test", "0123", "t0", "t1");
  REQUIRE(m["files"].size() == 2);
  CHECK(m["files"][0]["file"] == "a.csv");
  CHECK(m["files"][0]["checksum"] == hex64(fnv1a64("x\r\n2\r\n")));
  std::ifstream f(dir / "a.csv", std::ios::binary);
  std::string body((std::istreambuf_iterator<char>(f)), {});
  CHECK(body == "x\r\n2\r\n");
  std::filesystem::remove_all(dir);
}
