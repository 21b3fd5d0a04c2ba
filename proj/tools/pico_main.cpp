// pico: check, graph and run PiCo pipeline programs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pico/pico.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pico::IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

pico::Program load_program(const std::string& path) {
  return pico::parse_program(read_file(path));
}

struct Bindings {
  std::vector<std::string> replays;  // NAME=PATH
  std::vector<std::string> sockets;  // NAME=HOST:PORT

  void apply(pico::ExecConfig& cfg) const {
    for (const std::string& spec : replays) {
      auto eq = spec.find('=');
      if (eq == std::string::npos)
        throw pico::IoError("--replay expects NAME=PATH, got '" + spec + "'");
      cfg.replay_bindings[spec.substr(0, eq)] = spec.substr(eq + 1);
    }
    for (const std::string& spec : sockets) {
      auto eq = spec.find('=');
      auto colon = spec.rfind(':');
      if (eq == std::string::npos || colon == std::string::npos || colon < eq)
        throw pico::IoError("--socket expects NAME=HOST:PORT, got '" + spec + "'");
      pico::SocketEndpoint ep;
      ep.host = spec.substr(eq + 1, colon - eq - 1);
      ep.port = static_cast<std::uint16_t>(std::stoi(spec.substr(colon + 1)));
      cfg.socket_bindings[spec.substr(0, eq)] = ep;
    }
  }
};

int do_check(const std::string& file) {
  pico::Program prog = load_program(file);
  pico::CheckReport report = pico::check_program(prog);
  for (const auto& row : report.rows)
    std::cout << row.kind << " " << row.name << " : " << row.signature << "\n";
  if (!report.entry_type.top_level()) {
    pico::TypeError err("top-level",
                        "entry pipeline '" + report.entry_name + "' has type " +
                            pico::to_string(report.entry_type) +
                            "; a top-level Pipeline must be \xE2\x88\x85 -> \xE2\x88\x85",
                        prog.entry_decl().loc);
    std::cerr << err.diagnostic(file) << "\n";
    return 2;
  }
  std::cout << "entry " << report.entry_name << " : ok, top-level\n";
  return 0;
}

int do_graph(const std::string& file, const std::string& dot_path) {
  pico::Program prog = load_program(file);
  pico::check_toplevel(prog);
  pico::PipelinePtr p = pico::normalize(prog.entry_pipeline());
  pico::DataflowGraph g = pico::build_graph(p);
  std::string dot = pico::export_dot(g);
  if (dot_path.empty() || dot_path == "-") {
    std::cout << dot;
  } else {
    std::ofstream out(dot_path, std::ios::binary | std::ios::trunc);
    if (!out) throw pico::IoError("cannot open '" + dot_path + "'");
    out << dot;
  }
  return 0;
}

nlohmann::json report_json(const pico::RunReport& report) {
  nlohmann::json j;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : report.edges)
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"items", e.items}});
  j["sinks"] = nlohmann::json::array();
  for (const auto& s : report.sinks)
    j["sinks"].push_back({{"vertex", s.vertex},
                          {"target", s.target},
                          {"items", s.items},
                          {"digest", s.digest}});
  return j;
}

int do_run(const std::string& file, const pico::ExecConfig& cfg,
           const std::string& report_path) {
  pico::Program prog = load_program(file);
  pico::check_toplevel(prog);
  pico::PipelinePtr p = pico::normalize(prog.entry_pipeline());
  pico::DataflowGraph g = pico::build_graph(p);
  pico::RunReport report = pico::run_graph(g, cfg);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw pico::IoError("cannot open '" + report_path + "'");
    out << report_json(report).dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PiCo pipeline compiler and interpreter"};
  app.require_subcommand(1);

  std::string file, dot_path, report_path;
  Bindings bindings;
  std::uint64_t batch = 0;
  bool nondet_merge = false;
  std::string in_override, out_override;

  CLI::App* check = app.add_subcommand("check", "type-check a program");
  check->add_option("file", file, "program file")->required();

  CLI::App* graph = app.add_subcommand("graph", "export the dataflow graph as DOT");
  graph->add_option("file", file, "program file")->required();
  graph->add_option("--dot", dot_path, "output path ('-' for stdout)");

  CLI::App* run = app.add_subcommand("run", "execute a top-level program");
  run->add_option("file", file, "program file")->required();
  run->add_option("--replay", bindings.replays, "bind a source NAME=PATH to a replay file");
  run->add_option("--socket", bindings.sockets, "bind a socket NAME=HOST:PORT");
  run->add_option("--batch", batch, "tumbling batch size for unbounded element-wise ops");
  run->add_flag("--nondeterministic-merge", nondet_merge,
                "allow arbitrary merge interleaving");
  run->add_option("--emit-report", report_path, "write a JSON run report");
  run->add_option("--in", in_override, "override the single file source path");
  run->add_option("--out", out_override, "override the single file sink path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return do_check(file);
    if (graph->parsed()) return do_graph(file, dot_path);

    pico::ExecConfig cfg;
    bindings.apply(cfg);
    if (batch > 0) cfg.set_batch_size(batch);
    cfg.deterministic_merge = !nondet_merge;
    if (!in_override.empty()) cfg.input_override = in_override;
    if (!out_override.empty()) cfg.output_override = out_override;
    return do_run(file, cfg, report_path);
  } catch (const pico::TypeError& e) {
    std::cerr << e.diagnostic(file) << "\n";
    return 2;
  } catch (const pico::SyntaxError& e) {
    std::cerr << file << ":" << pico::to_string(e.where()) << ": syntax error: "
              << e.what() << "\n";
    return run->parsed() ? 3 : 2;
  } catch (const pico::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const pico::PicoError& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
