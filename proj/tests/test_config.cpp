#include "doctest.h"

#include <limits>
#include <string>

#include "gibbslab/config.hpp"
#include "gibbslab/error.hpp"

using namespace gibbs;

namespace {

std::string message_of(const std::string& text, const ConfigSchema* schema = nullptr) {
  try {
    auto c = Config::parse(text, "t.cfg");
    if (schema) c.validate(*schema);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
    return e.what();
  }
  return "";
}

const char* kSample =
    "# leading comment\n"
    "[run]\n"
    "seed = 3   # trailing\n"
    "\n"
    "[space]\n"
    "  kind=circle\n"
    "resolution = 256\n"
    "[ldp.mc]\n"
    "ns = 2..5, 8\n"
    "f = cos(x)#no space, kept\n";

}  // namespace

TEST_CASE("parse, serialize, parse is the identity") {
  auto a = Config::parse(kSample);
  CHECK(a.get_int("run", "seed") == 3);
  CHECK(a.get_string("space", "kind") == "circle");
  CHECK(a.get_string("ldp.mc", "f") == "cos(x)#no space, kept");
  CHECK(a.get_ints("ldp.mc", "ns") == std::vector<int>{2, 3, 4, 5, 8});
  auto b = Config::parse(a.serialize());
  CHECK(a == b);
  CHECK(b.serialize() == a.serialize());
  auto c = Config::parse(b.serialize());
  CHECK(c == a);
}

TEST_CASE("errors carry line and column") {
  CHECK(message_of("[run]\nseed 3\n") == "t.cfg:2:1: expected 'key = value'");
  CHECK(message_of("key = 1\n") == "t.cfg:1:1: entry outside of any section");
  CHECK(message_of("[run\n") == "t.cfg:1:1: missing ']' in section header");
  CHECK(message_of("[run]\na = 1\n  a = 2\n").rfind("t.cfg:3:3: duplicate key 'a'", 0) == 0);
  CHECK(message_of("[run]\na =   \n") == "t.cfg:2:4: empty value for 'a'");

  ConfigSchema schema{{"run", {"seed"}}};
  CHECK(message_of("[run]\nseed = 1\n   sede = 2\n", &schema) == "t.cfg:3:4: unknown key 'sede' in [run]");
  CHECK(message_of("[run]\n[other]\n", &schema) == "t.cfg:2:2: unknown section [other]");

  auto c = Config::parse("[a]\nx =  1.5q\nn = 2.5\nb = maybe\nl = 1, two\n", "t.cfg");
  auto what = [&](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(what([&] { c.get_double("a", "x"); }) == "t.cfg:2:6: 'x' expects a number, got '1.5q'");
  CHECK(what([&] { c.get_int("a", "n"); }) == "t.cfg:3:5: 'n' expects an integer, got '2.5'");
  CHECK(what([&] { c.get_bool("a", "b"); }) == "t.cfg:4:5: 'b' expects true or false, got 'maybe'");
  CHECK(what([&] { c.get_doubles("a", "l"); }).rfind("t.cfg:5:5:", 0) == 0);
  CHECK(what([&] { c.get_double("a", "missing"); }) == "t.cfg: missing required key 'missing' in [a]");
}

TEST_CASE("typed values") {
  auto c = Config::parse("[a]\nbeta = inf\nsteps = 1e6\nflag = yes\nxs = -1, 0.5e-3\n");
  CHECK(c.get_double("a", "beta") == std::numeric_limits<double>::infinity());
  CHECK(c.get_int("a", "steps") == 1000000);
  CHECK(c.get_bool("a", "flag"));
  CHECK(c.get_doubles("a", "xs") == std::vector<double>{-1.0, 0.5e-3});
  CHECK(c.get_double("a", "absent", 2.0) == 2.0);
  c.set("a", "beta", "3");
  c.set("b", "new", "x");
  CHECK(c.get_double("a", "beta") == 3.0);
  CHECK(c.get_string("b", "new") == "x");
}
