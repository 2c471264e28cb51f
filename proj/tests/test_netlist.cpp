#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace muxlink;

namespace {

const char* kSmall = R"(# tiny
INPUT(a)
INPUT(b)
OUTPUT(y)
y = NAND(a, b)
)";

}  // namespace

TEST_CASE("parse minimal nand") {
  auto n = parse_bench(kSmall);
  CHECK(n.inputs() == std::vector<std::string>{"a", "b"});
  CHECK(n.outputs() == std::vector<std::string>{"y"});
  REQUIRE(n.gates().size() == 1);
  CHECK(n.gates()[0].type == GateType::Nand);
  CHECK(n.key_size() == 0);
}

TEST_CASE("parse accepts aliases, case and comments") {
  auto n = parse_bench("input(a)\nOUTPUT(z)\nw = inv(a) # note\nz = BUFF(w)\n");
  CHECK(n.gates()[0].type == GateType::Not);
  CHECK(n.gates()[1].type == GateType::Buf);
}

TEST_CASE("parse errors carry line numbers") {
  auto line_of = [](const char* text) {
    try {
      parse_bench(text);
    } catch (const ParseError& e) {
      return static_cast<long>(e.line());
    }
    return -1L;
  };
  CHECK(line_of("INPUT(a)\nOUTPUT(y)\ny = AND(a)\n") == 3);
  CHECK(line_of("INPUT(a)\nOUTPUT(y)\ny = FOO(a, a)\n") == 3);
  CHECK(line_of("INPUT(a)\nOUTPUT(y)\ny = NOT(q)\n") == 3);
  CHECK(line_of("INPUT(a)\nINPUT(a)\n") == 2);
  CHECK(line_of("INPUT(a)\ngarbage here\n") == 2);
  CHECK(line_of("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = BUFF(a)\n") == 4);
}

TEST_CASE("undefined output and cycles are rejected") {
  CHECK_THROWS(parse_bench("INPUT(a)\nOUTPUT(q)\ny = NOT(a)\n"));
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ng1 = AND(a, g2)\ng2 = AND(a, g1)\ny = NOT(g1)\n"),
                  CycleError);
}

TEST_CASE("key inputs must be contiguous") {
  CHECK_THROWS(parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput1)\nOUTPUT(y)\ny = MUX(keyinput1, a, b)\n"));
  auto n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput0)\nOUTPUT(y)\nw = NOT(a)\nv = NOT(b)\n"
                       "m = MUX(keyinput0, w, v)\ny = AND(m, a)\n");
  CHECK(n.key_size() == 1);
  CHECK(n.data_inputs() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("topological order") {
  auto chain = parse_bench("INPUT(a)\nOUTPUT(g2)\ng1 = NOT(a)\ng2 = NOT(g1)\n");
  const auto& order = topological_order(chain);
  REQUIRE(order.size() == 2);
  CHECK(chain.gates()[order[0]].output == "g1");
  CHECK(chain.gates()[order[1]].output == "g2");

  // Independent gates keep declaration order.
  auto pair = parse_bench("INPUT(a)\nOUTPUT(g1)\nOUTPUT(g2)\ng2 = NOT(a)\ng1 = BUFF(a)\n");
  CHECK(pair.gates()[topological_order(pair)[0]].output == "g2");
}

TEST_CASE("round trip on generated netlists") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto n = generate_netlist(150, 8, 8, seed % 2 ? GenMode::Random : GenMode::AndOnly, seed);
    auto text = write_bench(n);
    auto back = parse_bench(text, n.name());
    CHECK(structurally_equal(n, back));
    CHECK(write_bench(back) == text);
  }
}

TEST_CASE("round trip preserves MUX operand order") {
  auto n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput0)\nOUTPUT(y)\nw = NOT(a)\nv = NOT(b)\n"
                       "m = MUX(keyinput0, v, w)\ny = AND(m, a)\n");
  auto back = parse_bench(write_bench(n));
  for (const auto& g : back.gates())
    if (g.type == GateType::Mux) CHECK(g.inputs == std::vector<std::string>{"keyinput0", "v", "w"});
}

TEST_CASE("structural equality ignores gate order only") {
  auto a = parse_bench("INPUT(a)\nOUTPUT(y)\nw = NOT(a)\ny = BUFF(w)\n");
  auto b = parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUFF(w)\nw = NOT(a)\n");
  auto c = parse_bench("INPUT(a)\nOUTPUT(y)\nw = BUFF(a)\ny = BUFF(w)\n");
  CHECK(structurally_equal(a, b));
  CHECK_FALSE(structurally_equal(a, c));
}

TEST_CASE("simulation truth tables") {
  auto n = parse_bench(kSmall);
  CHECK(simulate(n, {{"a", true}, {"b", true}}).at("y") == false);
  CHECK(simulate(n, {{"a", false}, {"b", true}}).at("y") == true);

  auto mux = parse_bench("INPUT(k)\nINPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = MUX(k, a, b)\n");
  CHECK(simulate(mux, {{"k", false}, {"a", true}, {"b", false}}).at("y") == true);
  CHECK(simulate(mux, {{"k", true}, {"a", true}, {"b", false}}).at("y") == false);

  const char* all = "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(o1)\nOUTPUT(o2)\nOUTPUT(o3)\nOUTPUT(o4)\n"
                    "OUTPUT(o5)\nOUTPUT(o6)\no1 = AND(a, b, c)\no2 = OR(a, b, c)\no3 = NOR(a, b, c)\n"
                    "o4 = XOR(a, b)\no5 = XNOR(a, b)\no6 = NAND(a, b, c)\n";
  auto g = parse_bench(all);
  for (int p = 0; p < 8; ++p) {
    bool a = p & 1, b = p & 2, c = p & 4;
    auto r = simulate(g, {{"a", a}, {"b", b}, {"c", c}});
    CHECK(r.at("o1") == (a && b && c));
    CHECK(r.at("o2") == (a || b || c));
    CHECK(r.at("o3") == !(a || b || c));
    CHECK(r.at("o4") == (a != b));
    CHECK(r.at("o5") == (a == b));
    CHECK(r.at("o6") == !(a && b && c));
  }
}

TEST_CASE("buffer chain is the identity") {
  std::string text = "INPUT(a)\nOUTPUT(b9)\nb0 = BUFF(a)\n";
  for (int i = 1; i < 10; ++i) text += "b" + std::to_string(i) + " = BUFF(b" + std::to_string(i - 1) + ")\n";
  auto n = parse_bench(text);
  CHECK(simulate(n, {{"a", true}}).at("b9"));
  CHECK_FALSE(simulate(n, {{"a", false}}).at("b9"));
}

TEST_CASE("bit-parallel simulation agrees with single patterns") {
  auto n = generate_netlist(200, 6, 5, GenMode::Random, 7);
  auto words = testing::exhaustive_outputs(n, n.inputs(), {});
  for (std::size_t p = 0; p < 64; ++p) {
    Assignment a;
    for (std::size_t i = 0; i < 6; ++i) a[n.inputs()[i]] = ((p >> i) & 1) != 0;
    auto r = simulate(n, a);
    for (std::size_t o = 0; o < n.outputs().size(); ++o)
      CHECK(r.at(n.outputs()[o]) == (((words[o] >> p) & 1) != 0));
  }
}

TEST_CASE("key gate tracing") {
  auto plain = parse_bench(kSmall);
  CHECK(trace_key_gates(plain).empty());

  auto n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput0)\nOUTPUT(y)\nw = NOT(a)\nv = NOT(b)\n"
                       "m = MUX(keyinput0, w, v)\ny = AND(m, a)\n");
  auto recs = trace_key_gates(n);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].key_index == 0);
  CHECK(recs[0].data_a == "w");
  CHECK(recs[0].data_b == "v");
  CHECK(recs[0].sinks == std::vector<std::string>{"y"});

  CHECK_THROWS_AS(trace_key_gates(parse_bench(
                      "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = AND(a, keyinput0)\n")),
                  UnsupportedLockError);
  CHECK_THROWS_AS(trace_key_gates(parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput0)\nOUTPUT(y)\n"
                                              "w = NOT(a)\ny = MUX(b, w, keyinput0)\n")),
                  UnsupportedLockError);
}

TEST_CASE("generator") {
  auto a = generate_netlist(300, 10, 12, GenMode::Random, 5);
  auto b = generate_netlist(300, 10, 12, GenMode::Random, 5);
  CHECK(write_bench(a) == write_bench(b));
  CHECK(a.gates().size() == 300);
  CHECK(a.outputs().size() == 12);
  CHECK(structurally_equal(a, parse_bench(write_bench(a))));
  CHECK(observable_gates(a).size() == 300);

  auto c = generate_netlist(300, 10, 12, GenMode::Random, 6);
  CHECK(write_bench(a) != write_bench(c));

  auto ands = generate_netlist(100, 6, 6, GenMode::AndOnly, 1);
  for (const auto& g : ands.gates()) CHECK(g.type == GateType::And);

  CHECK_THROWS(generate_netlist(0, 4, 4, GenMode::Random, 1));
  CHECK_THROWS(generate_netlist(5, 4, 6, GenMode::Random, 1));
  CHECK_THROWS(generate_netlist(5, 1, 1, GenMode::AndOnly, 1));
}
