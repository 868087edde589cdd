#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "friable/cli.hpp"

namespace fc = friable::cli;

int main(int argc, char** argv) {
  CLI::App app{"Smooth-number Diophantine approximation toolkit"};
  app.set_config("--config", "", "key=value file mirroring the flags; flags win over the file");
  app.allow_config_extras(false);

  std::string command = "search", alpha = "quad:1,1,5,2", theta = "1/4", Y, format = "json", out;
  fc::RunConfig cfg;
  app.add_option("command", command, "search | psi | rho | alpha | kloosterman | dispersion")->required();
  app.add_option("--alpha", alpha, "quad:p,s,d,r for (p + s sqrt d)/r, or dec:<digits>:<precision>");
  app.add_option("--theta", theta, "exponent in (0, 6/17), as p/q or a decimal");
  app.add_option("--C", cfg.C, "smoothness exponent: Y = (log X)^C");
  app.add_option("--qmin", cfg.q_min, "smallest convergent denominator searched");
  app.add_option("--qmax", cfg.q_max, "largest convergent denominator searched");
  app.add_option("--Y", Y, "smoothness bound, a real or inf");
  app.add_option("--eta", cfg.eta, "saving exponent of the dispersion benchmarks");
  app.add_option("--delta", cfg.delta, "range parameter of the bilinear decomposition");
  app.add_option("--budget", cfg.budget, "maximum loop iterations per command");
  app.add_option("--out", out, "output file (default: standard output)");
  app.add_option("--format", format, "json | csv");
  app.add_flag("--timing", cfg.timing, "record wall-clock runtime in dispersion reports");
  app.add_option("--members", cfg.member_cap, "members written per convergent (0 = all)");
  app.add_option("--report", cfg.report, "dispersion report: sigma | bilinear | type1 | type2");
  app.add_option("--x", cfg.x, "x grid")->delimiter(',');
  app.add_option("--y", cfg.y, "y grid")->delimiter(',');
  app.add_option("--u", cfg.u, "u grid")->delimiter(',');
  app.add_option("--M", cfg.M, "M grid")->delimiter(',');
  app.add_option("--N", cfg.N, "N grid")->delimiter(',');
  app.add_option("--R", cfg.R, "R grid")->delimiter(',');
  app.add_option("--q", cfg.q, "q grid")->delimiter(',');
  app.add_option("--a", cfg.a, "a grid")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fc::kBadConfig;
  }

  try {
    cfg.command = fc::parse_command(command);
    cfg.alpha_spec = alpha;
    cfg.theta = friable::parse_rational(theta);
    cfg.format = fc::parse_format(format);
    if (!Y.empty()) cfg.Y = fc::parse_real_or_inf(Y);
    cfg.output_path = out;
    cfg.validate();

    if (out.empty()) return fc::run(cfg, std::cout);
    std::ofstream file(out, std::ios::binary);
    if (!file) {
      std::cerr << "cannot open " << out << "\n";
      return fc::kFailure;
    }
    const int code = fc::run(cfg, file);
    file.close();
    if (!file) {
      std::cerr << "write to " << out << " failed\n";
      return fc::kFailure;
    }
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fc::exit_code_for(e);
  }
}
