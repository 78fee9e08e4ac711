#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfcast/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mfcast: mixed-frequency time-series forecasting toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    int jobs = 1;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "Generate a dataset from a data generating process config"},
        {"align", "Frequency-align a dataset into a low-frequency design matrix"},
        {"fit", "Fit a midas, umidas or ar1 model"},
        {"forecast", "Rolling or recursive out-of-sample forecasting"},
        {"gridsearch", "Hyperparameter grid search"},
        {"montecarlo", "Monte Carlo estimator comparison"},
        {"evaluate", "Evaluate forecast files into a report"},
        {"report", "Emit CUMSFE plot data for a model/benchmark pair"},
    };

    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_option("-o,--output-dir", output_dir, "Output directory (overrides config)");
        sub->add_option("-s,--set", overrides, "Dotted-path config overrides (key.sub=value)");
        sub->add_option("-j,--jobs", jobs, "Worker parallelism cap (results identical for any N)");
    }

    CLI11_PARSE(app, argc, argv);

    const std::string sub = app.get_subcommands().front()->get_name();
    return mfcast::cli::run(sub, config_path, overrides, output_dir, jobs);
}
