#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fit diffusion models to weekly attention series and report on them"};
    app.require_subcommand(1);

    difftrend::cli::FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "fit model families to every series in a CSV");
    fit->add_option("input", fit_args.input, "long-format CSV (date,service,region,value)")
        ->required();
    fit->add_option("--out", fit_args.out, "output directory")->required();
    fit->add_option("--family", fit_args.family, "bass, sg, weibull, or all")
        ->check(CLI::IsMember({"bass", "sg", "weibull", "all"}))
        ->capture_default_str();
    fit->add_option("--config", fit_args.config, "JSON file with fit/onset settings")
        ->envname("DIFFTREND_CONFIG");
    fit->add_option("--launch-dates", fit_args.launch_dates,
                    "CSV (service,launch_date) for services live before the window");
    fit->add_option("--threads", fit_args.threads, "worker threads for fitting")
        ->capture_default_str();
    fit->add_option("--seed", fit_args.seed, "seed recorded in the manifest")
        ->capture_default_str();

    difftrend::cli::OnsetArgs onset_args;
    CLI::App* onset = app.add_subcommand("onset", "detect per-series onsets only");
    onset->add_option("input", onset_args.input, "long-format CSV")->required();
    onset->add_option("--out", onset_args.out, "CSV path (stdout when omitted)");
    onset->add_option("--drift", onset_args.drift, "CUSUM allowance per step");
    onset->add_option("--threshold", onset_args.threshold, "CUSUM decision level");
    onset->add_option("--window", onset_args.window, "baseline weeks")->capture_default_str();

    difftrend::cli::ReportArgs report_args;
    CLI::App* report =
        app.add_subcommand("report", "aggregate a fit run into figure-ready tables");
    report->add_option("results", report_args.results, "directory written by 'fit'")->required();
    report->add_option("--out", report_args.out, "output directory")->required();
    report->add_option("--map", report_args.map, "CSV (region,group) cluster map")->required();
    report->add_option("--group-by", report_args.group_by, "what the map clusters: region or language")
        ->check(CLI::IsMember({"region", "language"}))
        ->capture_default_str();
    report->add_flag("--include-unconverged", report_args.include_unconverged,
                     "embed non-converged fits too");

    difftrend::cli::ForecastArgs forecast_args;
    CLI::App* forecast = app.add_subcommand("forecast", "extend fitted curves past the window");
    forecast->add_option("results", forecast_args.results, "directory written by 'fit'")
        ->required();
    forecast->add_option("--out", forecast_args.out, "output directory")->required();
    forecast->add_option("--horizon-weeks", forecast_args.horizon_weeks, "weeks past the last edge")
        ->required();
    forecast->add_flag("--best-only", forecast_args.best_only,
                       "emit only each series' best family");
    forecast->add_flag("--force", forecast_args.force, "include non-converged fits");
    forecast->add_option("--input", forecast_args.input,
                         "corpus CSV, used only when the results directory has no prepared series");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return difftrend::cli::cmd_fit(fit_args);
        if (onset->parsed()) return difftrend::cli::cmd_onset(onset_args);
        if (report->parsed()) return difftrend::cli::cmd_report(report_args);
        if (forecast->parsed()) return difftrend::cli::cmd_forecast(forecast_args);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
