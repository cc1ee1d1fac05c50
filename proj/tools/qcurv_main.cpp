#include "qcurv/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"qcurv: radial solutions of the prescribed Q-curvature problem"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", cache_path;

    CLI::App* solve = app.add_subcommand("solve", "run one solve from a TOML config");
    solve->add_option("--config", config_path, "TOML config path")->required();
    solve->add_option("--out", out_dir, "output directory");
    solve->add_option("--kernel-cache", cache_path, "binary kernel cache path");

    bool fast = false;
    CLI::App* verify = app.add_subcommand("verify", "run the oracle suite");
    verify->add_flag("--fast", fast, "smaller grids, skip the slowest oracle");

    std::string probe_config, probe_out;
    CLI::App* probe = app.add_subcommand("probe", "kappa sweep with the nonexistence probe");
    probe->add_option("--config", probe_config, "TOML config path")->required();
    probe->add_option("--out", probe_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return qcurv::cli::cmd_solve(config_path, out_dir, cache_path);
    if (verify->parsed()) return qcurv::cli::cmd_verify(fast);
    if (probe->parsed()) return qcurv::cli::cmd_probe(probe_config, probe_out);
    return 2;
}
