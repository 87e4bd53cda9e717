#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvqkd/cvqkd.hpp"

namespace cvqkd::cli {

enum class Format { text, csv, json };

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_numerical = 2;

/// Bad flag values or flag combinations detected after parsing.
class UsageError : public std::invalid_argument {
  public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

struct CommandConfig {
    std::string subcommand;
    std::string protocol = "coherent";
    std::string bound = "general";
    std::string direction;
    std::optional<double> ra;
    std::optional<double> ta;
    std::optional<double> t;
    double eps = 0.0;
    std::string base = "nats";
    std::string format = "text";
    // sweep
    std::string axis;
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
    std::string quantity = "rate";
    // batch
    std::string input;
};

namespace detail {

inline ProtocolKind parse_kind(const std::string& s) {
    if (s == "coherent") {
        return ProtocolKind::coherent;
    }
    if (s == "squeezed") {
        return ProtocolKind::squeezed;
    }
    throw UsageError("unknown protocol '" + s + "' (expected coherent or squeezed)");
}

inline BoundKind parse_bound(const std::string& s) {
    if (s == "general") {
        return BoundKind::general;
    }
    if (s == "general_w") {
        return BoundKind::general_w;
    }
    if (s == "collective") {
        return BoundKind::collective;
    }
    throw UsageError("unknown bound '" + s + "' (expected general, general_w or collective)");
}

inline std::optional<Direction> parse_direction(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    if (s == "direct") {
        return Direction::direct;
    }
    if (s == "reverse") {
        return Direction::reverse;
    }
    throw UsageError("unknown direction '" + s + "' (expected direct or reverse)");
}

inline LogBase parse_base(const std::string& s) {
    if (s == "nats") {
        return LogBase::nats;
    }
    if (s == "bits") {
        return LogBase::bits;
    }
    throw UsageError("unknown base '" + s + "' (expected nats or bits)");
}

inline Format parse_format(const std::string& s) {
    if (s == "text") {
        return Format::text;
    }
    if (s == "csv") {
        return Format::csv;
    }
    if (s == "json") {
        return Format::json;
    }
    throw UsageError("unknown format '" + s + "' (expected text, csv or json)");
}

inline double require(const std::optional<double>& v, const char* flag) {
    if (!v) {
        throw UsageError(std::string("missing required flag ") + flag);
    }
    if (!std::isfinite(*v)) {
        throw UsageError(std::string(flag) + " must be finite");
    }
    return *v;
}

inline ProtocolParams protocol_of(const CommandConfig& cfg) {
    const ProtocolKind kind = parse_kind(cfg.protocol);
    const double ra = require(cfg.ra, "--ra");
    const double ta = cfg.ta ? *cfg.ta : default_alice_transmittivity(kind);
    return ProtocolParams(kind, ra, ta);
}

inline RateSelection selection_of(const CommandConfig& cfg) {
    RateSelection sel{parse_bound(cfg.bound), parse_direction(cfg.direction), protocol_of(cfg)};
    try {
        validate_bound_selection(sel.bound, sel.direction, sel.protocol.kind());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return sel;
}

inline FieldValue optional_field(const std::optional<double>& v) {
    return v ? FieldValue{*v} : FieldValue{};
}

inline std::vector<Field> echo_params(const RateSelection& sel) {
    return {
        {"protocol", std::string(to_string(sel.protocol.kind()))},
        {"bound", std::string(to_string(sel.bound))},
        {"direction", sel.direction ? FieldValue{std::string(to_string(*sel.direction))} : FieldValue{}},
        {"ra", sel.protocol.modulation()},
        {"ta", sel.protocol.alice_transmittivity()},
    };
}

} // namespace detail

inline OutputRecord rate_record(const RateSelection& sel, const ChannelParams& ch, LogBase base) {
    const KeyRateReport report = key_rate(sel.bound, sel.direction, sel.protocol, ch).in(base);
    OutputRecord rec;
    rec.params = detail::echo_params(sel);
    rec.params.push_back({"t", ch.transmission()});
    rec.params.push_back({"eps", ch.excess_noise()});
    rec.results = {
        {"i_ab", report.i_ab},
        {"eve_term", report.eve_term},
        {"key_rate", report.key_rate},
        {"base", std::string(to_string(base))},
    };
    return rec;
}

inline OutputRecord critical_loss_record(const RateSelection& sel, double eps) {
    const CriticalPoint cp = critical_transmission(sel, eps);
    OutputRecord rec;
    rec.params = detail::echo_params(sel);
    rec.params.push_back({"eps", eps});
    rec.params.push_back({"quantity", std::string("t_c")});
    rec.results = {
        {"critical_value", cp.value},
        {"loss_db", detail::optional_field(cp.loss_db)},
        {"residual", cp.residual},
    };
    return rec;
}

inline OutputRecord critical_noise_record(const RateSelection& sel, double t) {
    const CriticalPoint cp = critical_noise(sel, t);
    OutputRecord rec;
    rec.params = detail::echo_params(sel);
    rec.params.push_back({"t", t});
    rec.params.push_back({"quantity", std::string("eps_c")});
    rec.results = {
        {"critical_value", cp.value},
        {"residual", cp.residual},
    };
    return rec;
}

inline void emit(const OutputRecord& rec, Format format, std::ostream& out) {
    switch (format) {
    case Format::text:
        rec.write_text(out);
        break;
    case Format::csv:
        rec.write_csv_header(out);
        rec.write_csv_row(out);
        break;
    case Format::json:
        rec.write_json(out);
        break;
    }
}

/// Computes the record for a single-point command (rate, critical-loss, critical-noise).
inline OutputRecord single_point(const CommandConfig& cfg) {
    const RateSelection sel = detail::selection_of(cfg);
    if (!std::isfinite(cfg.eps)) {
        throw UsageError("--eps must be finite");
    }
    if (cfg.subcommand == "rate") {
        return rate_record(sel, ChannelParams(detail::require(cfg.t, "--t"), cfg.eps), detail::parse_base(cfg.base));
    }
    if (cfg.subcommand == "critical-loss") {
        if (cfg.t) {
            throw UsageError("critical-loss solves for the transmission; --t is not accepted");
        }
        return critical_loss_record(sel, cfg.eps);
    }
    if (cfg.subcommand == "critical-noise") {
        if (cfg.eps != 0.0) {
            throw UsageError("critical-noise solves for the excess noise; --eps is not accepted");
        }
        return critical_noise_record(sel, detail::require(cfg.t, "--t"));
    }
    throw UsageError("unknown command '" + cfg.subcommand + "'");
}

/// Runs `body`, mapping library exceptions onto exit codes and printing the message.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const NumericalFailure& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    }
}

// ---------------------------------------------------------------------------
// Sweeps and figure datasets

namespace detail {

inline std::vector<double> linear_grid(double from, double to, int steps) {
    std::vector<double> grid(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        grid[static_cast<std::size_t>(i)] =
            i == steps - 1 ? to : from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    return grid;
}

/// Evaluates one table cell group, converting failures into empty cells plus a warning.
template <typename F>
bool try_cells(F&& fill, std::vector<std::optional<double>>& cells, std::size_t first, std::size_t count,
               const std::string& where, std::ostream& err) {
    try {
        fill(cells);
        return true;
    } catch (const std::exception& e) {
        for (std::size_t i = first; i < first + count; ++i) {
            cells[i] = std::nullopt;
        }
        err << "warning: " << where << ": " << e.what() << '\n';
        return false;
    }
}

} // namespace detail

inline int run_sweep(const CommandConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.axis != "ra" && cfg.axis != "t" && cfg.axis != "eps") {
        throw UsageError("--x must be one of ra, t, eps");
    }
    if (!std::isfinite(cfg.from) || !std::isfinite(cfg.to) || !(cfg.from < cfg.to)) {
        throw UsageError("sweep needs finite --from < --to");
    }
    if (cfg.steps < 2) {
        throw UsageError("sweep needs --steps >= 2");
    }
    const std::string& q = cfg.quantity;
    std::vector<std::string> columns{cfg.axis};
    if (q == "rate") {
        columns.insert(columns.end(), {"i_ab", "eve_term", "key_rate"});
    } else if (q == "critical-loss") {
        if (cfg.axis == "t") {
            throw UsageError("critical-loss cannot be swept over t");
        }
        columns.insert(columns.end(), {"t_c", "loss_db", "residual"});
    } else if (q == "critical-loss-db") {
        if (cfg.axis == "t") {
            throw UsageError("critical-loss-db cannot be swept over t");
        }
        columns.push_back("loss_db");
    } else if (q == "critical-noise") {
        if (cfg.axis == "eps") {
            throw UsageError("critical-noise cannot be swept over eps");
        }
        columns.insert(columns.end(), {"eps_c", "residual"});
    } else {
        throw UsageError("--quantity must be one of rate, critical-loss, critical-loss-db, critical-noise");
    }

    // Validate the fixed flags once so usage errors are not reported per row.
    CommandConfig probe = cfg;
    if (cfg.axis == "ra") {
        probe.ra = 1.0;
    }
    const RateSelection base_sel = detail::selection_of(probe);
    const LogBase base = detail::parse_base(cfg.base);
    if (q == "rate" && cfg.axis != "t") {
        detail::require(cfg.t, "--t");
    }
    if (q == "critical-noise" && cfg.axis != "t") {
        detail::require(cfg.t, "--t");
    }

    CsvTable table(columns);
    std::size_t ok = 0;
    for (double x : detail::linear_grid(cfg.from, cfg.to, cfg.steps)) {
        CommandConfig point = cfg;
        if (cfg.axis == "ra") {
            point.ra = x;
        } else if (cfg.axis == "t") {
            point.t = x;
        } else {
            point.eps = x;
        }
        std::vector<std::optional<double>> row(columns.size());
        row[0] = x;
        const bool good = detail::try_cells(
            [&](std::vector<std::optional<double>>& cells) {
                RateSelection sel = base_sel;
                sel.protocol = detail::protocol_of(point);
                if (q == "rate") {
                    const auto r =
                        key_rate(sel.bound, sel.direction, sel.protocol, ChannelParams(*point.t, point.eps)).in(base);
                    cells[1] = r.i_ab;
                    cells[2] = r.eve_term;
                    cells[3] = r.key_rate;
                } else if (q == "critical-loss") {
                    const auto cp = critical_transmission(sel, point.eps);
                    cells[1] = cp.value;
                    cells[2] = cp.loss_db;
                    cells[3] = cp.residual;
                } else if (q == "critical-loss-db") {
                    cells[1] = critical_transmission(sel, point.eps).loss_db;
                } else {
                    const auto cp = critical_noise(sel, *point.t);
                    cells[1] = cp.value;
                    cells[2] = cp.residual;
                }
            },
            row, 1, columns.size() - 1, cfg.axis + "=" + format_number(x), err);
        ok += good ? 1 : 0;
        table.add_row(std::move(row));
    }
    table.write(out);
    return ok > 0 ? exit_ok : exit_numerical;
}

/// Tolerable losses against modulation for the general bound, eps = 0.
inline int run_fig2(std::ostream& out, std::ostream& err) {
    CsvTable table({"ra", "loss_db_coherent_general", "loss_db_squeezed_general"});
    std::size_t ok = 0;
    for (double ra : detail::linear_grid(0.1, 5.0, 50)) {
        std::vector<std::optional<double>> row(3);
        row[0] = ra;
        const ProtocolParams kinds[] = {ProtocolParams::coherent(ra), ProtocolParams::squeezed(ra)};
        for (std::size_t k = 0; k < 2; ++k) {
            ok += detail::try_cells(
                      [&](std::vector<std::optional<double>>& cells) {
                          cells[k + 1] =
                              critical_transmission({BoundKind::general, std::nullopt, kinds[k]}, 0.0).loss_db;
                      },
                      row, k + 1, 1, "ra=" + format_number(ra), err)
                      ? 1
                      : 0;
        }
        table.add_row(std::move(row));
    }
    table.write(out);
    return ok > 0 ? exit_ok : exit_numerical;
}

/// Highest transmission used in fig3; the 0 dB row is evaluated at T = 0.999.
inline constexpr double fig3_max_transmission = 0.999;

/// Critical excess noise against losses for the collective bounds at r_A = 15.
inline int run_fig3(std::ostream& out, std::ostream& err) {
    CsvTable table({"loss_db", "eps_c_coh_direct", "eps_c_coh_reverse", "eps_c_sq_direct", "eps_c_sq_reverse"});
    const RateSelection selections[] = {
        {BoundKind::collective, Direction::direct, ProtocolParams::coherent(high_modulation)},
        {BoundKind::collective, Direction::reverse, ProtocolParams::coherent(high_modulation)},
        {BoundKind::collective, Direction::direct, ProtocolParams::squeezed(high_modulation)},
        {BoundKind::collective, Direction::reverse, ProtocolParams::squeezed(high_modulation)},
    };
    std::size_t ok = 0;
    for (double db : detail::linear_grid(0.0, 10.0, 50)) {
        const double t = std::min(transmission_from_db(db), fig3_max_transmission);
        std::vector<std::optional<double>> row(5);
        row[0] = db;
        for (std::size_t k = 0; k < 4; ++k) {
            try {
                row[k + 1] = critical_noise(selections[k], t).value;
                ++ok;
            } catch (const NoPositiveRegion&) {
                row[k + 1] = std::nullopt; // expected for direct reconciliation beyond 3 dB
            } catch (const std::exception& e) {
                row[k + 1] = std::nullopt;
                err << "warning: loss_db=" << format_number(db) << ": " << e.what() << '\n';
            }
        }
        table.add_row(std::move(row));
    }
    table.write(out);
    return ok > 0 ? exit_ok : exit_numerical;
}

inline int run_constants(Format format, std::ostream& out) {
    const auto rows = compare_constants();
    if (format == Format::json) {
        for (const auto& r : rows) {
            nlohmann::ordered_json j;
            j["name"] = r.name;
            j["analytic"] = round_to_output_precision(r.analytic);
            j["numeric"] = round_to_output_precision(r.numeric);
            j["gap"] = round_to_output_precision(std::abs(r.analytic - r.numeric));
            j["version"] = std::string(version_string);
            out << j.dump() << '\n';
        }
        return exit_ok;
    }
    if (format == Format::csv) {
        out << "name,analytic,numeric,gap\n";
        for (const auto& r : rows) {
            out << r.name << ',' << format_number(r.analytic) << ',' << format_number(r.numeric) << ','
                << format_number(std::abs(r.analytic - r.numeric)) << '\n';
        }
        return exit_ok;
    }
    for (const auto& r : rows) {
        out << r.name << ": analytic " << format_number(r.analytic) << ", numeric " << format_number(r.numeric)
            << ", gap " << format_number(std::abs(r.analytic - r.numeric)) << '\n';
    }
    out << "version: " << version_string << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------
// Batch mode: one JSON parameter object per input line, one JSON result per output line.

namespace detail {

inline CommandConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw UsageError("each batch line must be a JSON object");
    }
    CommandConfig cfg;
    for (const auto& [key, value] : j.items()) {
        auto number = [&]() {
            if (!value.is_number()) {
                throw UsageError("batch field '" + key + "' must be a number");
            }
            return value.get<double>();
        };
        auto text = [&]() {
            if (!value.is_string()) {
                throw UsageError("batch field '" + key + "' must be a string");
            }
            return value.get<std::string>();
        };
        if (key == "command") {
            cfg.subcommand = text();
        } else if (key == "protocol") {
            cfg.protocol = text();
        } else if (key == "bound") {
            cfg.bound = text();
        } else if (key == "direction") {
            cfg.direction = text();
        } else if (key == "base") {
            cfg.base = text();
        } else if (key == "ra") {
            cfg.ra = number();
        } else if (key == "ta") {
            cfg.ta = number();
        } else if (key == "t") {
            cfg.t = number();
        } else if (key == "eps") {
            cfg.eps = number();
        } else {
            throw UsageError("unknown batch field '" + key + "'");
        }
    }
    if (cfg.subcommand.empty()) {
        throw UsageError("batch line lacks \"command\"");
    }
    return cfg;
}

} // namespace detail

inline int run_batch(const std::string& path, std::ostream& out, std::ostream& err) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open batch input '" + path + "'");
    }
    int worst = exit_ok;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::ostringstream diag;
        const int code = guarded(
            [&]() {
                const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded()) {
                    throw UsageError("malformed JSON");
                }
                single_point(detail::config_from_json(j)).write_json(out);
                return exit_ok;
            },
            diag);
        if (code != exit_ok) {
            std::string message = diag.str();
            if (!message.empty() && message.back() == '\n') {
                message.pop_back();
            }
            nlohmann::ordered_json e;
            e["line"] = line_no;
            e["error"] = message;
            e["version"] = std::string(version_string);
            out << e.dump() << '\n';
            err << "line " << line_no << ": " << message << '\n';
            worst = std::max(worst, code);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Security bounds for continuous-variable QKD with Gaussian states and homodyne detection",
                 "cvqkd"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version_string));

    CommandConfig cfg;
    const CLI::Validator finite(
        [](std::string& s) -> std::string {
            try {
                std::size_t used = 0;
                const double v = std::stod(s, &used);
                if (used != s.size()) {
                    return "not a number: " + s;
                }
                return std::isfinite(v) ? std::string{} : "value must be finite: " + s;
            } catch (const std::exception&) {
                return "not a number: " + s;
            }
        },
        "FINITE");

    auto add_model_flags = [&](CLI::App* sub, bool with_t, bool with_eps) {
        sub->add_option("--protocol", cfg.protocol, "coherent | squeezed")
            ->check(CLI::IsMember({"coherent", "squeezed"}));
        sub->add_option("--bound", cfg.bound, "general | general_w | collective")
            ->check(CLI::IsMember({"general", "general_w", "collective"}));
        sub->add_option("--direction", cfg.direction, "direct | reverse (collective bound only)")
            ->check(CLI::IsMember({"direct", "reverse"}));
        sub->add_option("--ra", cfg.ra, "modulation / squeezing r_A")->check(finite);
        sub->add_option("--ta", cfg.ta, "Alice's beam-splitter transmittivity (default 0.5 coherent, 1 squeezed)")
            ->check(finite);
        if (with_t) {
            sub->add_option("--t", cfg.t, "channel transmission")->check(finite);
        }
        if (with_eps) {
            sub->add_option("--eps", cfg.eps, "excess noise referred to the channel input")->check(finite);
        }
    };
    auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", cfg.format, "text | csv | json")->check(CLI::IsMember({"text", "csv", "json"}));
    };

    auto* rate = app.add_subcommand("rate", "key rate at one parameter point");
    add_model_flags(rate, true, true);
    rate->add_option("--base", cfg.base, "nats | bits")->check(CLI::IsMember({"nats", "bits"}));
    add_format(rate);

    auto* closs = app.add_subcommand("critical-loss", "critical transmission (and losses in dB)");
    add_model_flags(closs, false, true);
    add_format(closs);

    auto* cnoise = app.add_subcommand("critical-noise", "critical excess noise at fixed transmission");
    add_model_flags(cnoise, true, false);
    add_format(cnoise);

    auto* sweep = app.add_subcommand("sweep", "CSV scan over one parameter");
    add_model_flags(sweep, true, true);
    sweep->add_option("--base", cfg.base, "nats | bits")->check(CLI::IsMember({"nats", "bits"}));
    sweep->add_option("--x", cfg.axis, "ra | t | eps")->required()->check(CLI::IsMember({"ra", "t", "eps"}));
    sweep->add_option("--from", cfg.from, "first grid value")->required()->check(finite);
    sweep->add_option("--to", cfg.to, "last grid value")->required()->check(finite);
    sweep->add_option("--steps", cfg.steps, "number of grid points (>= 2)")->required();
    sweep->add_option("--quantity", cfg.quantity, "rate | critical-loss | critical-loss-db | critical-noise")
        ->check(CLI::IsMember({"rate", "critical-loss", "critical-loss-db", "critical-noise"}));

    auto* fig2 = app.add_subcommand("fig2", "tolerable losses vs modulation, general bound (CSV)");
    auto* fig3 = app.add_subcommand("fig3", "critical excess noise vs losses, collective bounds (CSV)");

    auto* constants = app.add_subcommand("constants", "closed-form limits next to their numeric counterparts");
    add_format(constants);

    auto* batch = app.add_subcommand("batch", "newline-delimited JSON parameter objects in, JSON results out");
    batch->add_option("--input", cfg.input, "input file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    return guarded(
        [&]() -> int {
            const Format format = detail::parse_format(cfg.format);
            if (rate->parsed() || closs->parsed() || cnoise->parsed()) {
                cfg.subcommand = rate->parsed() ? "rate" : closs->parsed() ? "critical-loss" : "critical-noise";
                emit(single_point(cfg), format, out);
                return exit_ok;
            }
            if (sweep->parsed()) {
                return run_sweep(cfg, out, err);
            }
            if (fig2->parsed()) {
                return run_fig2(out, err);
            }
            if (fig3->parsed()) {
                return run_fig3(out, err);
            }
            if (constants->parsed()) {
                return run_constants(format, out);
            }
            if (batch->parsed()) {
                return run_batch(cfg.input, out, err);
            }
            throw UsageError("no command given");
        },
        err);
}

} // namespace cvqkd::cli
