#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "muxlink/netlist.hpp"

namespace muxlink {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) || c == '(' || c == ')' || c == ',' || c == '=' || c == '#') return false;
  }
  return true;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(a[i])) !=
        std::toupper(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

// Parses "NAME(arg, arg, ...)" into name and argument list.
bool split_call(std::string_view text, std::string_view& name, std::vector<std::string>& args) {
  auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') return false;
  name = trim(text.substr(0, open));
  auto body = text.substr(open + 1, text.size() - open - 2);
  args.clear();
  if (trim(body).empty()) return true;
  std::size_t start = 0;
  while (true) {
    auto comma = body.find(',', start);
    auto arg = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
    if (!is_identifier(arg)) return false;
    args.emplace_back(arg);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

}  // namespace

Netlist parse_bench(std::istream& in, std::string name) {
  std::vector<std::string> inputs, outputs;
  std::vector<Gate> gates;
  std::unordered_map<std::string, std::size_t> defined_at;
  std::vector<std::size_t> gate_line;
  std::vector<std::size_t> output_line;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      std::string_view keyword;
      std::vector<std::string> args;
      if (!split_call(line, keyword, args) || args.size() != 1)
        throw ParseError(lineno, "expected INPUT(x), OUTPUT(x) or 'w = TYPE(...)'");
      if (iequals(keyword, "INPUT")) {
        if (!defined_at.emplace(args[0], lineno).second)
          throw ParseError(lineno, "wire '" + args[0] + "' defined twice");
        inputs.push_back(args[0]);
      } else if (iequals(keyword, "OUTPUT")) {
        outputs.push_back(args[0]);
        output_line.push_back(lineno);
      } else {
        throw ParseError(lineno, "unknown declaration '" + std::string(keyword) + "'");
      }
      continue;
    }

    auto lhs = trim(line.substr(0, eq));
    auto rhs = trim(line.substr(eq + 1));
    if (!is_identifier(lhs)) throw ParseError(lineno, "bad wire name '" + std::string(lhs) + "'");
    std::string_view type_name;
    std::vector<std::string> args;
    if (!split_call(rhs, type_name, args)) throw ParseError(lineno, "malformed gate expression");
    auto type = parse_gate_type(type_name);
    if (!type) throw ParseError(lineno, "unsupported gate type '" + std::string(type_name) + "'");
    std::string out(lhs);
    if (!defined_at.emplace(out, lineno).second)
      throw ParseError(lineno, "wire '" + out + "' defined twice");
    Gate gate{out, *type, std::move(args)};
    try {
      validate_arity(gate);
    } catch (const NetlistError& e) {
      throw ParseError(lineno, e.what());
    }
    gates.push_back(std::move(gate));
    gate_line.push_back(lineno);
  }

  for (std::size_t i = 0; i < gates.size(); ++i) {
    for (const auto& w : gates[i].inputs)
      if (!defined_at.count(w)) throw ParseError(gate_line[i], "undefined wire '" + w + "'");
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!defined_at.count(outputs[i]))
      throw ParseError(output_line[i], "undefined output '" + outputs[i] + "'");
  }

  return Netlist(std::move(name), std::move(inputs), std::move(outputs), std::move(gates));
}

Netlist parse_bench(std::string_view text, std::string name) {
  std::istringstream in{std::string(text)};
  return parse_bench(in, std::move(name));
}

Netlist read_bench_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  auto slash = path.find_last_of('/');
  auto stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.resize(dot);
  return parse_bench(in, stem);
}

void write_bench(const Netlist& n, std::ostream& out) {
  out << "# " << n.name() << "\n";
  out << "# " << n.inputs().size() << " inputs, " << n.outputs().size() << " outputs, "
      << n.gates().size() << " gates\n\n";
  for (const auto& in : n.inputs()) out << "INPUT(" << in << ")\n";
  out << "\n";
  for (const auto& o : n.outputs()) out << "OUTPUT(" << o << ")\n";
  out << "\n";
  for (std::size_t gi : n.topological_order()) {
    const Gate& g = n.gates()[gi];
    out << g.output << " = " << to_string(g.type) << "(";
    for (std::size_t i = 0; i < g.inputs.size(); ++i) out << (i ? ", " : "") << g.inputs[i];
    out << ")\n";
  }
}

std::string write_bench(const Netlist& n) {
  std::ostringstream out;
  write_bench(n, out);
  return out.str();
}

void write_bench_file(const Netlist& n, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_bench(n, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace muxlink
