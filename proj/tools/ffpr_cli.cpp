// ffpr: batch front-end for the phase retrieval toolkit.
//
//   ffpr gen --count 500 --seed 7 --out train.ffpr
//   ffpr break --input train.ffpr --output train.broken.ffpr
//   ffpr solve --input test.ffpr --output recon.ffpr
//   ffpr eval --truth test.ffpr --recon recon.ffpr --out metrics.csv
//   ffpr sqrt-demo --n 2000 --break --out sqrt_broken
//   ffpr export --input train.ffpr --index 0 --what measurement --transform fourth-root --out y0.pgm
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Logs go to stderr.

#include <ffpr/ffpr.hpp>
#include <ffpr/parallel.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using namespace ffpr;

namespace {

bool g_quiet = false;

template <class... Args>
void log(Args&&... args) {
    if (g_quiet) return;
    std::ostringstream os;
    os << "[ffpr] ";
    (os << ... << args);
    std::cerr << os.str() << '\n';
}

/// Thrown for bad option combinations discovered after parsing; exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Key-value record of a run, written next to its outputs.
class Manifest {
public:
    explicit Manifest(std::string subcommand) : started_(std::chrono::steady_clock::now()) {
        add("subcommand", std::move(subcommand));
        add("version", kVersionString);
    }

    template <class T>
    void add(const std::string& key, const T& value) {
        std::ostringstream os;
        if constexpr (std::is_same_v<T, double>) {
            os << format_double(value);
        } else if constexpr (std::is_same_v<T, bool>) {
            os << (value ? "true" : "false");
        } else {
            os << value;
        }
        entries_.emplace_back(key, os.str());
    }

    void write(const fs::path& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw ContainerError(ContainerError::Kind::Io, "cannot write manifest " + path.string());
        for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        out << "duration_seconds=" << format_double(secs) << '\n';
        log("manifest ", path.string());
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::chrono::steady_clock::time_point started_;
};

fs::path manifest_path(const fs::path& output) { return fs::path(output.string() + ".manifest"); }

// ---- option vocabularies ---------------------------------------------------

const std::map<std::string, Centering> kCenterings{{"bbox", Centering::BoundingBox}, {"centroid", Centering::Centroid}};
const std::map<std::string, Channel> kChannels{
    {"magnitude", Channel::Magnitude}, {"phase", Channel::Phase}, {"intensity", Channel::Intensity}};
const std::map<std::string, ValueTransform> kTransforms{{"identity", ValueTransform::Identity},
                                                        {"fourth-root", ValueTransform::FourthRoot}};
const std::map<std::string, sqrt_demo::Activation> kActivations{{"relu", sqrt_demo::Activation::Relu},
                                                                {"tanh", sqrt_demo::Activation::Tanh}};

/// "hio:90,er:10,..." <-> schedule.
std::string format_schedule(const std::vector<ScheduleStage>& s) {
    std::string out;
    for (const auto& stage : s) {
        if (!out.empty()) out += ',';
        out += (stage.kind == Projection::HIO ? "hio:" : "er:") + std::to_string(stage.iterations);
    }
    return out;
}

std::vector<ScheduleStage> parse_schedule(const std::string& text) {
    std::vector<ScheduleStage> s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("schedule entry '" + item + "' is not kind:iterations");
        std::string kind = item.substr(0, colon);
        std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
        std::size_t iterations = 0;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item.substr(colon + 1), &used);
            if (used != item.size() - colon - 1 || v <= 0) throw std::invalid_argument("range");
            iterations = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw UsageError("schedule entry '" + item + "' needs a positive iteration count");
        }
        if (kind == "hio") {
            s.push_back({Projection::HIO, iterations});
        } else if (kind == "er") {
            s.push_back({Projection::ER, iterations});
        } else {
            throw UsageError("schedule entry '" + item + "': kind must be hio or er");
        }
    }
    if (s.empty()) throw UsageError("schedule is empty");
    return s;
}

// ---- --config support ------------------------------------------------------

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Expand `--config FILE` into `--key=value` arguments placed right after the
/// subcommand name, so anything typed on the command line overrides the file.
std::vector<std::string> expand_config(std::vector<std::string> args, const std::vector<std::string>& subcommands) {
    std::string config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config.empty()) return args;

    std::ifstream in(config);
    if (!in) throw UsageError("cannot read config file " + config);
    std::vector<std::string> injected;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(config + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }

    auto pos = std::find_if(args.begin() + 1, args.end(), [&](const std::string& a) {
        return std::find(subcommands.begin(), subcommands.end(), a) != subcommands.end();
    });
    if (pos == args.end()) throw UsageError("--config needs a subcommand");
    args.insert(pos + 1, injected.begin(), injected.end());
    return args;
}

// ---- shared helpers ---------------------------------------------------------

Container load(const fs::path& path) {
    Container c = read_container(path);
    log("read ", c.records.size(), " records (", c.header.n1, "x", c.header.n2, ") from ", path.string());
    return c;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Kind::Io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ContainerError(ContainerError::Kind::Io, "failed writing " + path.string());
}

// ---- subcommands ------------------------------------------------------------

struct GenArgs {
    DatasetSpec spec;
    fs::path out;
};

int run_gen(const GenArgs& a, unsigned threads) {
    Manifest m("gen");
    const auto data = generate_dataset(a.spec, threads);
    std::vector<ContainerRecord> recs;
    recs.reserve(data.size());
    for (const auto& d : data) recs.push_back({d.object, d.measurement});
    write_container(a.out, recs, kFlagMeasurements);
    log("wrote ", recs.size(), " records to ", a.out.string());

    m.add("count", a.spec.count);
    m.add("size", a.spec.frame_size);
    m.add("oversample", a.spec.oversample);
    m.add("seed", a.spec.seed);
    m.add("min_defects", a.spec.min_defects);
    m.add("max_defects", a.spec.max_defects);
    m.add("threads", threads);
    m.add("output", a.out.string());
    m.write(manifest_path(a.out));
    return 0;
}

struct BreakArgs {
    fs::path input, output;
    CanonicalizeOptions opts;
    std::string centering = "bbox";
};

int run_break(BreakArgs a, unsigned threads) {
    Manifest m("break");
    a.opts.centering = kCenterings.at(a.centering);
    const Container in = load(a.input);
    std::vector<ComplexImage> objects;
    objects.reserve(in.records.size());
    for (const auto& r : in.records) objects.push_back(r.object);

    const CanonicalBatch batch = canonicalize_dataset(objects, a.opts, threads);
    for (const auto& f : batch.failures) log("record ", f.index, ": ", f.message);

    std::vector<ContainerRecord> out;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        if (!batch.records[i]) continue;
        ComplexImage obj = batch.records[i]->object;
        // A record that is already canonical (to the class-collapse tolerance)
        // is passed through untouched, so breaking is idempotent on files.
        if (max_abs_diff(obj, objects[i]) <= 1e-8 * max_abs(objects[i])) {
            obj = objects[i];
            ++kept;
        }
        Measurement y = forward_measure(obj, a.opts.oversample);
        out.push_back({std::move(obj), std::move(y)});
    }
    const std::array<std::size_t, 4> dims{in.header.n1, in.header.n2,
                                          oversampled_extent(in.header.n1, a.opts.oversample),
                                          oversampled_extent(in.header.n2, a.opts.oversample)};
    write_container(a.output, out, kFlagMeasurements | kFlagSymmetryBroken, dims);
    log("wrote ", out.size(), " canonical records to ", a.output.string(), " (", kept, " already canonical)");

    m.add("input", a.input.string());
    m.add("output", a.output.string());
    m.add("center", a.opts.center);
    m.add("centering", a.centering);
    m.add("oversample", a.opts.oversample);
    m.add("threads", threads);
    m.add("records_in", in.records.size());
    m.add("records_out", out.size());
    m.add("failures", batch.failures.size());
    m.write(manifest_path(a.output));
    if (!batch.failures.empty()) {
        log(batch.failures.size(), " record(s) failed");
        return 1;
    }
    return 0;
}

struct SolveArgs {
    fs::path input, output, residuals;
    SolverConfig config;
    std::string schedule = format_schedule(default_schedule());
};

int run_solve(SolveArgs a, unsigned threads) {
    Manifest m("solve");
    a.config.schedule = parse_schedule(a.schedule);
    try {
        a.config.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const Container in = load(a.input);
    if (!in.header.has_measurements()) throw InvalidArgument(a.input.string() + " carries no measurements");

    const std::size_t n = in.records.size();
    std::vector<SolveResult> results(n);
    parallel_for(n, threads, [&](std::size_t i) {
        SolverConfig c = a.config;
        c.seed = RandomStream::substream(a.config.seed, i).next_u64();
        c.threads = 1;
        results[i] = solve(*in.records[i].measurement, in.header.n1, in.header.n2, c);
    });

    std::vector<ContainerRecord> out;
    std::string csv = "record,iteration,residual\n";
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({results[i].reconstruction, in.records[i].measurement});
        for (std::size_t k = 0; k < results[i].residual_history.size(); ++k) {
            csv += std::to_string(i) + ',' + std::to_string(k) + ',' + format_double(results[i].residual_history[k]) + '\n';
        }
        if (results[i].support_flagged) {
            ++flagged;
            log("record ", i, ": shrinkwrap emptied the support at least once; previous mask kept");
        }
    }
    write_container(a.output, out, kFlagMeasurements, {in.header.n1, in.header.n2, in.header.m1, in.header.m2});
    if (a.residuals.empty()) a.residuals = fs::path(a.output.string() + ".residuals.csv");
    write_text(a.residuals, csv);
    log("wrote ", n, " reconstructions to ", a.output.string());

    m.add("input", a.input.string());
    m.add("output", a.output.string());
    m.add("residuals", a.residuals.string());
    m.add("beta", a.config.beta);
    m.add("schedule", a.schedule);
    m.add("shrinkwrap", a.config.shrinkwrap);
    m.add("shrinkwrap_every", a.config.shrinkwrap_every);
    m.add("shrinkwrap_sigma0", a.config.shrinkwrap_sigma0);
    m.add("shrinkwrap_sigma_decay", a.config.shrinkwrap_sigma_decay);
    m.add("shrinkwrap_threshold", a.config.shrinkwrap_threshold);
    m.add("restarts", a.config.restarts);
    m.add("seed", a.config.seed);
    m.add("threads", threads);
    m.add("support_flagged_records", flagged);
    m.write(manifest_path(a.output));
    return 0;
}

struct EvalArgs {
    fs::path truth, recon, out;
    std::vector<std::string> metrics{"mse", "pa-mse", "sa-mse"};
    bool scale_adjust = true;
};

int run_eval(const EvalArgs& a, unsigned threads) {
    Manifest m("eval");
    const Container truth = load(a.truth);
    const Container recon = load(a.recon);
    if (truth.records.size() != recon.records.size()) {
        throw DimensionError("truth has " + std::to_string(truth.records.size()) + " records, reconstruction has " +
                             std::to_string(recon.records.size()));
    }
    MetricOptions opts;
    opts.scale_adjust = a.scale_adjust;
    const std::size_t n = truth.records.size();
    std::vector<std::vector<MetricValue>> values(n, std::vector<MetricValue>(a.metrics.size()));
    parallel_for(n, threads, [&](std::size_t i) {
        const ComplexImage& x = truth.records[i].object;
        const ComplexImage& z = recon.records[i].object;
        for (std::size_t k = 0; k < a.metrics.size(); ++k) {
            const std::string& name = a.metrics[k];
            values[i][k] = name == "mse" ? mse(x, z) : name == "pa-mse" ? pa_mse(x, z, opts) : sa_mse_fast(x, z, opts);
        }
    });

    std::string csv = "record";
    for (const auto& name : a.metrics) {
        std::string p = name;
        std::replace(p.begin(), p.end(), '-', '_');
        for (const char* col : {"raw", "per_pixel", "relative", "eta", "theta", "flip", "t1", "t2", "degenerate"}) {
            csv += ',' + p + '_' + col;
        }
    }
    csv += '\n';
    for (std::size_t i = 0; i < n; ++i) {
        csv += std::to_string(i);
        for (const MetricValue& v : values[i]) {
            const auto& g = v.optimal_transform;
            csv += ',' + format_double(v.raw) + ',' + format_double(v.per_pixel) + ',' + format_double(v.relative) + ',' +
                   format_double(v.eta) + ',' + format_double(g.theta) + ',' + (g.flip ? "1" : "0") + ',' +
                   std::to_string(g.t1) + ',' + std::to_string(g.t2) + ',' + (v.degenerate ? "1" : "0");
        }
        csv += '\n';
    }
    write_text(a.out, csv);

    m.add("truth", a.truth.string());
    m.add("recon", a.recon.string());
    m.add("output", a.out.string());
    m.add("scale_adjust", a.scale_adjust);
    m.add("threads", threads);
    for (std::size_t k = 0; k < a.metrics.size(); ++k) {
        std::vector<double> rel;
        for (const auto& row : values) rel.push_back(row[k].relative);
        const double med = median(rel);
        log(a.metrics[k], ": median relative ", format_double(med), " over ", n, " records");
        std::string key = a.metrics[k];
        std::replace(key.begin(), key.end(), '-', '_');
        m.add("median_relative_" + key, med);
    }
    m.write(manifest_path(a.out));
    return 0;
}

struct SqrtArgs {
    std::size_t n = 2000;
    bool broken = false;
    std::uint64_t data_seed = 0;
    sqrt_demo::MlpConfig config;
    std::string activation = "relu";
    std::size_t grid_points = 181;
    fs::path out;
};

int run_sqrt(SqrtArgs a) {
    Manifest m("sqrt-demo");
    a.config.activation = kActivations.at(a.activation);
    try {
        a.config.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    fs::create_directories(a.out);
    const auto data = sqrt_demo::build_sqrt_dataset(a.n, a.broken, a.data_seed);
    log("training on ", a.n, a.broken ? " symmetry-broken" : " raw", " samples for ", a.config.epochs, " epochs");
    const auto result = sqrt_demo::train_mlp(data, a.config);
    log("final training MSE ", format_double(result.final_train_mse));

    std::string loss = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
        loss += std::to_string(e) + ',' + format_double(result.loss_curve[e]) + '\n';
    }
    write_text(a.out / "loss.csv", loss);
    std::string pred = "y,prediction,reference\n";
    double test = 0.0;
    const auto grid = sqrt_demo::evaluate_sqrt(result.model, sqrt_demo::default_grid(a.grid_points));
    for (const auto& p : grid) {
        pred += format_double(p.y) + ',' + format_double(p.prediction) + ',' + format_double(p.reference) + '\n';
        test += (p.prediction - p.reference) * (p.prediction - p.reference);
    }
    write_text(a.out / "predictions.csv", pred);
    if (!grid.empty()) test /= static_cast<double>(grid.size());

    m.add("n", a.n);
    m.add("break", a.broken);
    m.add("data_seed", a.data_seed);
    m.add("seed", a.config.seed);
    m.add("layers", a.config.layers);
    m.add("width", a.config.hidden_width);
    m.add("activation", a.activation);
    m.add("epochs", a.config.epochs);
    m.add("batch_size", a.config.batch_size);
    m.add("learning_rate", a.config.learning_rate);
    m.add("final_lr_fraction", a.config.final_lr_fraction);
    m.add("grid_points", a.grid_points);
    m.add("output", a.out.string());
    m.add("final_train_mse", result.final_train_mse);
    m.add("grid_mse_vs_sqrt", test);
    m.write(a.out / "manifest.txt");
    return 0;
}

struct ExportArgs {
    fs::path input, out;
    std::size_t index = 0;
    std::string what = "object";
    std::string channel = "magnitude";
    std::string transform = "identity";
    std::string format = "pgm";
};

int run_export(const ExportArgs& a) {
    Manifest m("export");
    const Container c = load(a.input);
    const bool measurement = a.what == "measurement";
    if (measurement && !c.header.has_measurements()) throw InvalidArgument(a.input.string() + " carries no measurements");

    if (a.format == "npy") {
        write_npy(a.out, c.records, measurement);
        log("wrote ", c.records.size(), " ", a.what, "s to ", a.out.string());
    } else {
        if (a.index >= c.records.size()) {
            throw UsageError("index " + std::to_string(a.index) + " out of range (" + std::to_string(c.records.size()) +
                             " records)");
        }
        const auto& rec = c.records[a.index];
        const Channel ch = kChannels.at(a.channel);
        const ValueTransform t = kTransforms.at(a.transform);
        if (measurement) {
            if (ch == Channel::Phase) throw UsageError("a measurement has no phase channel");
            export_image(*rec.measurement, a.out, ch, t);
        } else {
            export_image(rec.object, a.out, ch, t);
        }
        log("wrote ", a.out.string());
    }

    m.add("input", a.input.string());
    m.add("output", a.out.string());
    m.add("format", a.format);
    m.add("what", a.what);
    if (a.format == "pgm") {
        m.add("index", a.index);
        m.add("channel", a.channel);
        m.add("transform", a.transform);
    }
    m.write(manifest_path(a.out));
    return 0;
}

template <class E>
CLI::IsMember member_of(const std::map<std::string, E>& names) {
    std::vector<std::string> keys;
    for (const auto& kv : names) keys.push_back(kv.first);
    return CLI::IsMember(keys);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Far-field phase retrieval toolkit: simulate, canonicalize, reconstruct, evaluate."};
    app.name("ffpr");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersionString);
    app.add_flag("-q,--quiet", g_quiet, "Suppress progress logging");
    unsigned threads = default_thread_count();

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--config", "key=value file with option defaults; flags override it");
    };

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Simulate crystals and their measurements");
    gen_cmd->add_option("--count", gen.spec.count, "Number of records")->check(CLI::PositiveNumber)->capture_default_str();
    gen_cmd->add_option("--size", gen.spec.frame_size, "Object frame size N")->check(CLI::Range(8, 4096))->capture_default_str();
    gen_cmd->add_option("--oversample", gen.spec.oversample, "Oversampling factor")->check(CLI::Range(1.0, 16.0))->capture_default_str();
    gen_cmd->add_option("--seed", gen.spec.seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--min-defects", gen.spec.min_defects)->capture_default_str();
    gen_cmd->add_option("--max-defects", gen.spec.max_defects)->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output container")->required();
    add_common(gen_cmd);

    BreakArgs brk;
    auto* break_cmd = app.add_subcommand("break", "Map every record to its canonical symmetry representative");
    break_cmd->add_option("-i,--input", brk.input, "Input container")->required()->check(CLI::ExistingFile);
    break_cmd->add_option("-o,--output", brk.output, "Output container")->required();
    break_cmd->add_flag("--center,!--no-center", brk.opts.center, "Center the support before the phase edits")->capture_default_str();
    break_cmd->add_option("--centering", brk.centering, "Centering rule")->check(member_of(kCenterings))->capture_default_str();
    break_cmd->add_option("--oversample", brk.opts.oversample, "Oversampling factor")->check(CLI::Range(1.0, 16.0))->capture_default_str();
    add_common(break_cmd);

    SolveArgs sol;
    auto* solve_cmd = app.add_subcommand("solve", "HIO + ER + shrinkwrap reconstruction of every record");
    solve_cmd->add_option("-i,--input", sol.input, "Container with measurements")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("-o,--output", sol.output, "Container of reconstructions")->required();
    solve_cmd->add_option("--residuals", sol.residuals, "Residual CSV (default: <output>.residuals.csv)");
    solve_cmd->add_option("--beta", sol.config.beta, "HIO feedback")->capture_default_str();
    solve_cmd->add_option("--schedule", sol.schedule, "Comma list of hio:N / er:N stages")->capture_default_str();
    solve_cmd->add_flag("--shrinkwrap,!--no-shrinkwrap", sol.config.shrinkwrap)->capture_default_str();
    solve_cmd->add_option("--shrinkwrap-every", sol.config.shrinkwrap_every)->capture_default_str();
    solve_cmd->add_option("--shrinkwrap-sigma0", sol.config.shrinkwrap_sigma0)->capture_default_str();
    solve_cmd->add_option("--shrinkwrap-sigma-decay", sol.config.shrinkwrap_sigma_decay)->capture_default_str();
    solve_cmd->add_option("--shrinkwrap-threshold", sol.config.shrinkwrap_threshold)->capture_default_str();
    solve_cmd->add_option("--restarts", sol.config.restarts)->capture_default_str();
    solve_cmd->add_option("--seed", sol.config.seed)->capture_default_str();
    add_common(solve_cmd);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score reconstructions against ground truth");
    eval_cmd->add_option("--truth", ev.truth, "Ground-truth container")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--recon", ev.recon, "Reconstruction container")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--metric", ev.metrics, "Metrics to report")
        ->check(CLI::IsMember({"mse", "pa-mse", "sa-mse"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->delimiter(',')
        ->capture_default_str();
    eval_cmd->add_flag("--scale,!--no-scale", ev.scale_adjust, "Fit the scale eta as well as the phase")->capture_default_str();
    eval_cmd->add_option("--out", ev.out, "Metrics CSV")->required();
    add_common(eval_cmd);

    SqrtArgs sq;
    auto* sqrt_cmd = app.add_subcommand("sqrt-demo", "Train an MLP to invert y = x^2, raw or symmetry-broken");
    sqrt_cmd->add_option("--n", sq.n, "Training samples")->check(CLI::PositiveNumber)->capture_default_str();
    sqrt_cmd->add_flag("--break,!--no-break", sq.broken, "Train on |x| instead of x")->capture_default_str();
    sqrt_cmd->add_option("--data-seed", sq.data_seed)->capture_default_str();
    sqrt_cmd->add_option("--seed", sq.config.seed, "Initialization and shuffling seed")->capture_default_str();
    sqrt_cmd->add_option("--epochs", sq.config.epochs)->capture_default_str();
    sqrt_cmd->add_option("--layers", sq.config.layers)->capture_default_str();
    sqrt_cmd->add_option("--width", sq.config.hidden_width)->capture_default_str();
    sqrt_cmd->add_option("--activation", sq.activation)->check(member_of(kActivations))->capture_default_str();
    sqrt_cmd->add_option("--batch-size", sq.config.batch_size, "0 for full batch")->capture_default_str();
    sqrt_cmd->add_option("--learning-rate", sq.config.learning_rate)->capture_default_str();
    sqrt_cmd->add_option("--final-lr-fraction", sq.config.final_lr_fraction)->capture_default_str();
    sqrt_cmd->add_option("--grid-points", sq.grid_points)->capture_default_str();
    sqrt_cmd->add_option("--out", sq.out, "Output directory")->required();
    sqrt_cmd->add_option("--config", "key=value file with option defaults; flags override it");

    ExportArgs ex;
    auto* export_cmd = app.add_subcommand("export", "Write one record as a 16-bit PGM, or all records as .npy");
    export_cmd->add_option("-i,--input", ex.input, "Input container")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--index", ex.index, "Record index (pgm)")->capture_default_str();
    export_cmd->add_option("--what", ex.what)->check(CLI::IsMember({"object", "measurement"}))->capture_default_str();
    export_cmd->add_option("--channel", ex.channel)->check(member_of(kChannels))->capture_default_str();
    export_cmd->add_option("--transform", ex.transform)->check(member_of(kTransforms))->capture_default_str();
    export_cmd->add_option("--format", ex.format)->check(CLI::IsMember({"pgm", "npy"}))->capture_default_str();
    export_cmd->add_option("--out", ex.out, "Output file")->required();
    export_cmd->add_option("--config", "key=value file with option defaults; flags override it");

    try {
        std::vector<std::string> args(argv, argv + argc);
        std::vector<std::string> names;
        for (const auto* sub : app.get_subcommands([](CLI::App*) { return true; })) names.push_back(sub->get_name());
        args = expand_config(std::move(args), names);
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);  // CLI11 consumes from the back
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "ffpr: " << e.what() << '\n';
        return 2;
    }

    try {
        if (gen_cmd->parsed()) {
            if (gen.spec.min_defects > gen.spec.max_defects) throw UsageError("--min-defects exceeds --max-defects");
            return run_gen(gen, threads);
        }
        if (break_cmd->parsed()) return run_break(brk, threads);
        if (solve_cmd->parsed()) return run_solve(sol, threads);
        if (eval_cmd->parsed()) return run_eval(ev, threads);
        if (sqrt_cmd->parsed()) return run_sqrt(sq);
        if (export_cmd->parsed()) return run_export(ex);
    } catch (const UsageError& e) {
        std::cerr << "ffpr: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ffpr: error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
