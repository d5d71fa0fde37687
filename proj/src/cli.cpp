#include "bitlattice/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "bitlattice/error.hpp"
#include "bitlattice/implied_vol.hpp"
#include "bitlattice/market_data.hpp"
#include "bitlattice/micro_models.hpp"
#include "bitlattice/path_stats.hpp"
#include "bitlattice/pricing.hpp"
#include "bitlattice/tree_engine.hpp"

namespace bitlattice::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Outputs are buffered and only written after the command succeeds.
class Outputs {
public:
    explicit Outputs(std::ostream& out) : out_(out) {}

    void add(const std::string& path, std::string content) {
        if (path.empty() || path == "-") {
            stdout_ += content;
        } else {
            files_.emplace_back(path, std::move(content));
        }
    }

    void commit() {
        for (const auto& [path, content] : files_) write_atomic(path, content);
        out_ << stdout_;
    }

private:
    static void write_atomic(const fs::path& path, const std::string& content) {
        fs::path tmp = path;
        tmp += ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw Error(ErrorCode::MissingFile, "cannot write '" + tmp.string() + "'");
            f << content;
            f.flush();
            if (!f) {
                f.close();
                fs::remove(tmp);
                throw Error(ErrorCode::MissingFile, "write to '" + tmp.string() + "' failed");
            }
        }
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec) {
            fs::remove(tmp);
            throw Error(ErrorCode::MissingFile, "cannot move output into '" + path.string() + "': " + ec.message());
        }
    }

    std::ostream& out_;
    std::string stdout_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
    }
}

ExerciseStyle parse_style(const std::string& s) {
    if (s == "euro" || s == "european") return ExerciseStyle::European;
    if (s == "amer" || s == "american") return ExerciseStyle::American;
    throw Error(ErrorCode::InvalidArgument, "style must be euro or amer, got '" + s + "'");
}

OptionKind parse_kind(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "call" || s == "c") return OptionKind::Call;
    if (s == "put" || s == "p") return OptionKind::Put;
    throw Error(ErrorCode::InvalidArgument, "option kind must be call or put, got '" + s + "'");
}

QMethod parse_q(const std::string& s) {
    if (s == "replication") return QMethod::Replication;
    if (s == "theta") return QMethod::ThetaForm;
    throw Error(ErrorCode::InvalidArgument, "q method must be replication or theta, got '" + s + "'");
}

const char* kind_name(OptionKind k) { return k == OptionKind::Call ? "call" : "put"; }

// ---- tree configuration -------------------------------------------------

struct TreeSetup {
    std::optional<StockTree> stock;
    std::optional<BondTree> bond;
    double rate = 0.0;
};

TreeSetup load_tree_config(const std::string& path) {
    const json cfg = read_json_file(path);
    if (!cfg.is_object()) throw Error(ErrorCode::InvalidArgument, "tree config must be a JSON object");
    static const std::set<std::string> known{"s0",    "maturity", "steps",  "times", "model",           "mu",
                                             "sigma", "p_up",     "probabilities", "nu", "params",      "rate",
                                             "rate_continuous", "beta0", "freeze_terminal", "max_steps"};
    for (const auto& [key, _] : cfg.items()) {
        if (!known.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown tree config key '" + key + "'");
    }
    try {
        TreeLimits limits;
        limits.max_steps = cfg.value("max_steps", 24);
        const double s0 = cfg.at("s0").get<double>();
        std::optional<TimeGrid> grid;
        if (cfg.contains("times")) {
            grid = TimeGrid(cfg.at("times").get<std::vector<double>>());
        } else {
            grid = TimeGrid::uniform(cfg.at("maturity").get<double>(), cfg.at("steps").get<int>());
        }
        check_steps(grid->steps(), limits);

        TreeSetup setup;
        if (cfg.contains("rate") && cfg.contains("rate_continuous")) {
            throw Error(ErrorCode::InvalidArgument, "give either rate or rate_continuous, not both");
        }
        setup.rate = cfg.contains("rate_continuous")
                         ? simple_equivalent_rate(cfg.at("rate_continuous").get<double>(), grid->dt(0))
                         : cfg.value("rate", 0.0);
        if (!(setup.rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be >= 0");

        const std::string model = cfg.value("model", std::string("moment"));
        if (model == "moment") {
            const auto moments = MomentSurface::constant(cfg.at("mu").get<double>(), cfg.at("sigma").get<double>());
            if (cfg.contains("probabilities")) {
                setup.stock = build_stock_tree(s0, *grid, moments, table_from_json(cfg.at("probabilities")), limits);
            } else {
                setup.stock = build_stock_tree(s0, *grid, moments, cfg.value("p_up", 0.5), limits);
            }
        } else if (model == "modified") {
            setup.stock = modified_log_return_tree(s0, cfg.at("nu").get<double>(), cfg.at("sigma").get<double>(),
                                                   cfg.value("p_up", 0.5), *grid, limits);
        } else if (model == "ma1" || model == "ar1") {
            json params = cfg.at("params");
            params["kind"] = model;
            std::optional<PathProbabilityTable> table;
            if (cfg.contains("probabilities")) table = table_from_json(cfg.at("probabilities"));
            const PathProbabilityTable* probs = table ? &*table : nullptr;
            if (model == "ma1") {
                setup.stock = increment_tree(ma1_from_json(params), s0, *grid, probs, limits);
            } else {
                setup.stock = increment_tree(ar1_from_json(params), s0, *grid, probs, limits);
            }
        } else {
            throw Error(ErrorCode::InvalidArgument, "model must be moment, modified, ma1 or ar1, got '" + model + "'");
        }
        setup.bond = build_bond_tree(cfg.value("beta0", 1.0), *grid, RateSurface::constant(setup.rate),
                                     cfg.value("freeze_terminal", false), limits);
        return setup;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("tree config: ") + e.what());
    }
}

// ---- option chain ----------------------------------------------------------

struct ChainRow {
    double expiry = 0.0;
    double strike = 0.0;
    OptionKind kind = OptionKind::Call;
    double market_price = 0.0;
};

std::vector<ChainRow> load_chain(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "'");
    std::vector<ChainRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line_no == 1 && line.rfind("expiry_years", 0) == 0) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4) {
            throw Error(ErrorCode::MalformedRow, "chain line " + std::to_string(line_no) + ": expected 4 columns");
        }
        ChainRow r;
        try {
            std::size_t used = 0;
            r.expiry = std::stod(cells[0], &used);
            r.strike = std::stod(cells[1]);
            r.kind = parse_kind(cells[2]);
            r.market_price = std::stod(cells[3]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::MalformedRow, "chain line " + std::to_string(line_no) + ": bad value");
        }
        if (!(r.expiry > 0.0 && r.strike > 0.0 && r.market_price >= 0.0)) {
            throw Error(ErrorCode::MalformedRow, "chain line " + std::to_string(line_no) + ": values out of range");
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw Error(ErrorCode::Empty, "chain '" + path + "' has no rows");
    return rows;
}

// ---- subcommands -----------------------------------------------------------

struct Ctx {
    Outputs* outputs;
};

void add_version(CLI::App* app) { app->set_version_flag("--version", std::string(kVersion)); }

void setup_estimate(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("estimate-probs", "Estimate joint path probabilities from a price CSV");
    add_version(sub);
    struct Opts {
        std::string input, output = "-", ztest_output = "-";
        bool header = false;
        int horizon = 0;
        double smooth = 0.0;
        std::optional<double> alpha;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--input", o->input, "Price CSV (YYYY-MM-DD,close)")->required();
    sub->add_flag("--header", o->header, "Skip the first line of the input");
    sub->add_option("--horizon", o->horizon, "Path length N (1..24)")->required();
    sub->add_option("--smooth", o->smooth, "Pseudo-count added to every path");
    sub->add_option("--ztest", o->alpha, "Also run the uniform z-test at this level");
    sub->add_option("--output", o->output, "Table JSON path ('-' = stdout)");
    sub->add_option("--ztest-output", o->ztest_output, "z-test CSV path ('-' = stdout)");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            const auto series = load_price_csv(o->input, o->header);
            const auto signs = to_signs(to_simple_returns(series));
            const auto table = estimate_path_probabilities(signs, o->horizon, o->smooth);
            std::optional<ZTestReport> report;
            if (o->alpha) report = uniform_z_test(table, *o->alpha);
            ctx.outputs->add(o->output, dump(to_json(table)));
            if (report) {
                std::ostringstream csv;
                write_ztest_csv(csv, *report);
                ctx.outputs->add(o->ztest_output, csv.str());
            }
        };
    });
}

void setup_ztest(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("ztest", "One-sided z-tests of a saved table against 1/2^N");
    add_version(sub);
    struct Opts {
        std::string table, output = "-", format = "csv";
        double alpha = 0.05;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--table", o->table, "Table JSON from estimate-probs")->required();
    sub->add_option("--alpha", o->alpha, "Significance level");
    sub->add_option("--format", o->format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--output", o->output, "Output path ('-' = stdout)");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            const auto report = uniform_z_test(table_from_json(read_json_file(o->table)), o->alpha);
            if (o->format == "json") {
                ctx.outputs->add(o->output, dump(to_json(report)));
            } else {
                std::ostringstream csv;
                write_ztest_csv(csv, report);
                ctx.outputs->add(o->output, csv.str());
            }
        };
    });
}

void setup_rolling(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("rolling", "Path probabilities over rolling windows");
    add_version(sub);
    struct Opts {
        std::string input, output = "-";
        bool header = false;
        int horizon = 0;
        std::size_t window = 0, step = 0;
        double smooth = 0.0;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--input", o->input, "Price CSV")->required();
    sub->add_flag("--header", o->header, "Skip the first line of the input");
    sub->add_option("--horizon", o->horizon, "Path length N")->required();
    sub->add_option("--window", o->window, "Window length in signs")->required();
    sub->add_option("--step", o->step, "Advance between windows in signs")->required();
    sub->add_option("--smooth", o->smooth, "Pseudo-count added to every path");
    sub->add_option("--output", o->output, "CSV path ('-' = stdout)");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            const auto series = load_price_csv(o->input, o->header);
            const auto signs = to_signs(to_simple_returns(series));
            const auto tables = rolling_estimates(signs, o->horizon, o->window, o->step, o->smooth);
            std::ostringstream csv;
            csv << "window,start,path_bits,probability\n" << std::setprecision(12);
            for (std::size_t w = 0; w < tables.size(); ++w) {
                const auto joint = tables[w].joint();
                for (std::size_t i = 0; i < joint.size(); ++i) {
                    csv << w << ',' << w * o->step << ',' << PathKey(i, o->horizon).to_string() << ',' << joint[i]
                        << '\n';
                }
            }
            ctx.outputs->add(o->output, csv.str());
        };
    });
}

void setup_fit_ma1(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("fit-ma1", "Fit the binary MA(1) increment model to price differences");
    add_version(sub);
    struct Opts {
        std::string input, output = "-";
        bool header = false;
        std::optional<double> p1;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--input", o->input, "Price CSV")->required();
    sub->add_flag("--header", o->header, "Skip the first line of the input");
    sub->add_option("--p1", o->p1, "Up-probability for the noise (default: sample up-frequency)");
    sub->add_option("--output", o->output, "Model JSON path ('-' = stdout)");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            const auto diffs = to_first_differences(load_price_csv(o->input, o->header));
            json j = to_json(estimate_ma1(diffs, o->p1));
            j["sample_size"] = diffs.values.size();
            ctx.outputs->add(o->output, dump(j));
        };
    });
}

void setup_simulate(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("simulate", "Simulate log prices contaminated by MA(q) noise");
    add_version(sub);
    struct Opts {
        double mu = 0.0, sigma = 0.2, noise_std = 0.0, dt = 1.0 / 252.0, s0 = 100.0;
        int noise_q = 1;
        std::vector<double> coef;
        std::size_t steps = 0;
        std::uint64_t seed = 1;
        std::string output = "-", components;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--mu", o->mu, "Log drift per year");
    sub->add_option("--sigma", o->sigma, "Volatility per sqrt-year");
    sub->add_option("--noise-q", o->noise_q, "MA order of the noise");
    sub->add_option("--noise-coef", o->coef, "phi_1..phi_q (default 0.5 each)")->delimiter(',');
    sub->add_option("--noise-std", o->noise_std, "Innovation std of the noise (log units)");
    sub->add_option("--steps", o->steps, "Number of steps")->required();
    sub->add_option("--dt", o->dt, "Step length in years");
    sub->add_option("--s0", o->s0, "Initial price");
    sub->add_option("--seed", o->seed, "Random seed");
    sub->add_option("--output", o->output, "Price CSV path ('-' = stdout)");
    sub->add_option("--components", o->components, "Optional CSV of efficient log price and noise");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            if (o->noise_q < 0) throw Error(ErrorCode::InvalidArgument, "--noise-q must be >= 0");
            MAqNoiseSpec noise;
            noise.innovation_std = o->noise_std;
            if (o->coef.empty()) o->coef.assign(static_cast<std::size_t>(o->noise_q), 0.5);
            if (o->coef.size() != static_cast<std::size_t>(o->noise_q)) {
                throw Error(ErrorCode::InvalidArgument, "--noise-coef needs exactly --noise-q values");
            }
            noise.coefficients.insert(noise.coefficients.end(), o->coef.begin(), o->coef.end());
            const double mu = o->mu, sigma = o->sigma;
            const auto path = simulate_contaminated_logprices([mu](double, double) { return mu; },
                                                              [sigma](double, double) { return sigma; }, noise,
                                                              o->steps, o->dt, o->s0, o->seed);
            std::ostringstream csv;
            write_price_csv(csv, path.observed);
            ctx.outputs->add(o->output, csv.str());
            if (!o->components.empty()) {
                std::ostringstream comp;
                comp << "index,efficient_log,noise\n" << std::setprecision(17);
                for (std::size_t k = 0; k < path.noise.size(); ++k) {
                    comp << k << ',' << path.efficient_log[k] << ',' << path.noise[k] << '\n';
                }
                ctx.outputs->add(o->components, comp.str());
            }
        };
    });
}

void setup_build_tree(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("build-tree", "Build the stock and bond trees and dump every node");
    add_version(sub);
    struct Opts {
        std::string config, output = "-", format = "csv";
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--tree-config", o->config, "Tree config JSON")->required();
    sub->add_option("--format", o->format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--output", o->output, "Output path ('-' = stdout)");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            const auto setup = load_tree_config(o->config);
            if (o->format == "json") {
                ctx.outputs->add(o->output, dump(tree_to_json(*setup.stock, &*setup.bond)));
            } else {
                std::ostringstream csv;
                write_tree_csv(csv, *setup.stock, &*setup.bond);
                ctx.outputs->add(o->output, csv.str());
            }
        };
    });
}

void setup_price(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("price", "Price a European or American option by backward induction");
    add_version(sub);
    struct Opts {
        std::string config, option = "call", style = "euro", exercise = "market", q = "replication";
        std::string output = "-", nodes_output;
        double strike = 0.0;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--tree-config", o->config, "Tree config JSON")->required();
    sub->add_option("--option", o->option, "call or put")->check(CLI::IsMember({"call", "put"}));
    sub->add_option("--strike", o->strike, "Strike price")->required();
    sub->add_option("--style", o->style, "euro or amer")->check(CLI::IsMember({"euro", "amer"}));
    sub->add_option("--exercise", o->exercise, "market or fair")->check(CLI::IsMember({"market", "fair"}));
    sub->add_option("--q", o->q, "replication or theta")->check(CLI::IsMember({"replication", "theta"}));
    sub->add_option("--output", o->output, "Result JSON path ('-' = stdout)");
    sub->add_option("--nodes-output", o->nodes_output, "Optional per-node CSV");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            OptionSpec spec;
            spec.style = parse_style(o->style);
            spec.payoff = parse_kind(o->option) == OptionKind::Call ? Payoff::call(o->strike) : Payoff::put(o->strike);
            const QMethod q = parse_q(o->q);
            const auto setup = load_tree_config(o->config);
            const RateSurface rates = RateSurface::constant(setup.rate);
            PricingOptions options;
            options.q_method = q;
            options.keep_nodes = !o->nodes_output.empty();
            const PriceReport r =
                spec.style == ExerciseStyle::European
                    ? price_european(*setup.stock, rates, spec, options)
                    : price_american(*setup.stock, rates, spec,
                                     o->exercise == "fair" ? ExerciseSource::FairHolding : ExerciseSource::MarketValue,
                                     options);
            json j{{"value", r.value},         {"delta_root", r.delta_root}, {"q_root", r.q_root},
                   {"q_method", r.q_method},   {"discounting", r.discounting}, {"exercise", r.exercise},
                   {"steps", setup.stock->steps()}};
            ctx.outputs->add(o->output, dump(j));
            if (options.keep_nodes) {
                const StockTree& s = *setup.stock;
                std::ostringstream csv;
                csv << "stage,path_bits,stock,value,delta\n" << std::setprecision(17);
                for (int n = 0; n <= s.steps(); ++n) {
                    for (std::size_t i = 0; i < stage_size(n); ++i) {
                        csv << n << ',' << PathKey(i, n).to_string() << ',' << s.value(n, i) << ','
                            << r.node_values[stage_offset(n) + i] << ',';
                        if (n < s.steps()) csv << r.node_deltas[stage_offset(n) + i];
                        csv << '\n';
                    }
                }
                ctx.outputs->add(o->nodes_output, csv.str());
            }
        };
    });
}

void setup_implied_vol(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("implied-vol", "Implied volatilities for an option chain");
    add_version(sub);
    struct Opts {
        std::string chain, pricer = "bsm", style = "euro", output = "-", summary;
        double spot = 0.0, rate = 0.0, p = 0.5;
        int steps = 10;
        std::optional<double> nu;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--chain", o->chain, "CSV expiry_years,strike,kind,market_price")->required();
    sub->add_option("--spot", o->spot, "Underlying price")->required();
    sub->add_option("--rate", o->rate, "Continuously compounded rate per year");
    sub->add_option("--pricer", o->pricer, "bsm or tree")->check(CLI::IsMember({"bsm", "tree"}));
    sub->add_option("--style", o->style, "euro or amer")->check(CLI::IsMember({"euro", "amer"}));
    sub->add_option("--steps", o->steps, "Tree steps (tree pricer)");
    sub->add_option("--p", o->p, "Physical up-probability (tree pricer)");
    sub->add_option("--nu", o->nu, "Physical log drift (tree pricer)");
    sub->add_option("--output", o->output, "Per-row CSV path ('-' = stdout)");
    sub->add_option("--summary", o->summary, "Optional summary JSON path");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            if (!(o->spot > 0.0)) throw Error(ErrorCode::InvalidArgument, "--spot must be positive");
            const auto rows = load_chain(o->chain);
            TreePricerConfig cfg;
            cfg.steps = o->steps;
            cfg.p_up = o->p;
            cfg.nu = o->nu;
            if (o->pricer == "tree") check_steps(cfg.steps, TreeLimits{});
            if (!(cfg.p_up > 0.0 && cfg.p_up < 1.0)) throw Error(ErrorCode::DegenerateProbability, "--p outside (0,1)");
            const VolPricer pricer = o->pricer == "bsm" ? bsm_pricer() : tree_pricer(cfg);
            const ExerciseStyle style = parse_style(o->style);

            std::ostringstream csv;
            csv << "expiry_years,strike,kind,market_price,implied_vol,status\n" << std::setprecision(12);
            std::vector<double> vols;
            std::vector<std::size_t> solved;
            std::vector<Instrument> insts;
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const auto& r = rows[k];
                Instrument inst{o->spot, r.strike, o->rate, r.expiry, r.kind, style};
                insts.push_back(inst);
                csv << r.expiry << ',' << r.strike << ',' << kind_name(r.kind) << ',' << r.market_price << ',';
                try {
                    const double v = implied_vol(r.market_price, pricer, inst);
                    csv << v << ",ok\n";
                    vols.push_back(v);
                    solved.push_back(k);
                } catch (const Error& e) {
                    if (!is_computation_error(e.code())) throw;
                    csv << ',' << to_string(e.code()) << '\n';
                }
            }
            if (solved.empty()) throw Error(ErrorCode::NoConvergence, "no chain row could be inverted");
            double mean_vol = 0.0;
            for (double v : vols) mean_vol += v;
            mean_vol /= static_cast<double>(vols.size());
            std::vector<double> model, market;
            for (std::size_t k : solved) {
                model.push_back(pricer(insts[k], mean_vol));
                market.push_back(rows[k].market_price);
            }
            ctx.outputs->add(o->output, csv.str());
            if (!o->summary.empty()) {
                json j{{"pricer", o->pricer},
                       {"rows", rows.size()},
                       {"solved", solved.size()},
                       {"mean_implied_vol", mean_vol},
                       {"flat_vol_mad", mad(model, market)}};
                ctx.outputs->add(o->summary, dump(j));
            }
        };
    });
}

void setup_compare_bsm(CLI::App& app, std::function<void()>& action, Ctx& ctx) {
    auto* sub = app.add_subcommand("compare-bsm", "Modified-tree prices against the closed form as N grows");
    add_version(sub);
    struct Opts {
        double sigma = 0.2, r = 0.05, spot = 100.0, strike = 100.0, t = 1.0, p = 0.5;
        std::optional<double> nu;
        std::vector<int> n{4, 8, 12, 16};
        std::string option = "call", output = "-";
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--sigma", o->sigma, "Volatility per sqrt-year");
    sub->add_option("--r", o->r, "Continuously compounded rate");
    sub->add_option("--spot", o->spot, "Spot price");
    sub->add_option("--strike", o->strike, "Strike");
    sub->add_option("--t", o->t, "Maturity in years");
    sub->add_option("--n", o->n, "Comma-separated step counts")->delimiter(',');
    sub->add_option("--p", o->p, "Physical up-probability");
    sub->add_option("--nu", o->nu, "Physical log drift (default puts the conditional log mean at 0)");
    sub->add_option("--option", o->option, "call or put")->check(CLI::IsMember({"call", "put"}));
    sub->add_option("--output", o->output, "CSV path ('-' = stdout)");
    sub->callback([&action, &ctx, o] {
        action = [&ctx, o] {
            Instrument inst{o->spot, o->strike, o->r, o->t, parse_kind(o->option), ExerciseStyle::European};
            if (!(o->sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "--sigma must be positive");
            if (!(o->p > 0.0 && o->p < 1.0)) throw Error(ErrorCode::DegenerateProbability, "--p outside (0,1)");
            for (int n : o->n) check_steps(n, TreeLimits{});
            const double reference = bsm_price(o->spot, o->strike, o->r, o->sigma, o->t, inst.kind);
            std::ostringstream csv;
            csv << "N,tree_price,bsm_price,rel_err\n" << std::setprecision(12);
            for (int n : o->n) {
                TreePricerConfig cfg;
                cfg.steps = n;
                cfg.p_up = o->p;
                cfg.nu = o->nu;
                const double price = tree_option_price(inst, o->sigma, cfg);
                csv << n << ',' << price << ',' << reference << ',' << std::fabs(price - reference) / reference << '\n';
            }
            ctx.outputs->add(o->output, csv.str());
        };
    });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Binary information tree estimation and pricing", "bitlattice"};
    add_version(&app);
    app.require_subcommand(1);

    Outputs outputs(out);
    Ctx ctx{&outputs};
    std::function<void()> action;
    setup_estimate(app, action, ctx);
    setup_ztest(app, action, ctx);
    setup_rolling(app, action, ctx);
    setup_fit_ma1(app, action, ctx);
    setup_simulate(app, action, ctx);
    setup_build_tree(app, action, ctx);
    setup_price(app, action, ctx);
    setup_implied_vol(app, action, ctx);
    setup_compare_bsm(app, action, ctx);

    std::vector<std::string> argv_storage{"bitlattice"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (action) action();
        outputs.commit();
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_computation_error(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace bitlattice::cli
