// speckern-bench: throughput, verification and comparison driver.

#include "speckern/bench.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace speckern;

namespace
{

std::vector<std::string> split(const std::string &s, char sep = ',')
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s)
    {
        if (c == sep)
        {
            out.push_back(cur);
            cur.clear();
        }
        else if (c != ' ')
        {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

int to_int(const std::string &s, const char *what)
{
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    {
        throw ConfigError(std::string("bad ") + what + " '" + s + "'");
    }
    return v;
}

double to_double(const std::string &s, const char *what)
{
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    {
        throw ConfigError(std::string("bad ") + what + " '" + s + "'");
    }
    return v;
}

std::pair<int, int> parse_order(const std::string &s)
{
    const auto dots = s.find("..");
    if (dots == std::string::npos)
    {
        const int p = to_int(s, "order");
        return {p, p};
    }
    return {to_int(s.substr(0, dots), "order"), to_int(s.substr(dots + 2), "order")};
}

std::vector<ShapeType> parse_shapes(const std::string &s)
{
    if (s == "all")
    {
        return {kAllShapes.begin(), kAllShapes.end()};
    }
    std::vector<ShapeType> out;
    for (const auto &t : split(s))
    {
        out.push_back(parse_shape(t));
    }
    return out;
}

std::vector<Strategy> parse_strategies(const std::string &s)
{
    std::vector<Strategy> out;
    for (const auto &t : split(s))
    {
        out.push_back(parse_strategy(t));
    }
    return out;
}

std::array<int, 3> parse_qpoints(const std::string &s)
{
    const auto parts = split(s);
    if (parts.size() != 1 && parts.size() != 3)
    {
        throw ConfigError("--qpoints takes one count or three comma-separated counts");
    }
    std::array<int, 3> q{};
    for (int d = 0; d < 3; ++d)
    {
        q[d] = to_int(parts[parts.size() == 1 ? 0 : d], "qpoints");
    }
    return q;
}

struct Options
{
    std::string op;
    std::string shape = "hex";
    std::string order = "1..4";
    std::string nelem = "1024";
    std::string strategy = "SumFac";
    std::string geometry = "regular";
    std::string form;
    double lambda = 1.0;
    int simd_width = 0;
    std::string qpoints;
    int reps = 5;
    int warmup = 1;
    std::uint64_t seed = 1;
    std::optional<int> threads;
    double amplitude = 0.05;
    std::string csv;
    bool raw = false;
    bool inject_fault = false;
    std::vector<std::string> a;
    std::vector<std::string> b;
};

void apply_key(BenchConfig &c, const std::string &key, const std::string &value)
{
    if (key == "op")
    {
        c.op = parse_bench_op(value);
    }
    else if (key == "shape")
    {
        c.shapes = parse_shapes(value);
    }
    else if (key == "order")
    {
        std::tie(c.order_min, c.order_max) = parse_order(value);
    }
    else if (key == "nelem")
    {
        c.nelem.clear();
        for (const auto &t : split(value))
        {
            c.nelem.push_back(to_int(t, "nelem"));
        }
    }
    else if (key == "strategy")
    {
        c.strategies = parse_strategies(value);
    }
    else if (key == "geometry")
    {
        c.geometry = parse_geometry(value);
    }
    else if (key == "form")
    {
        if (value.empty())
        {
            c.form.reset();
        }
        else
        {
            c.form = parse_form(value);
        }
    }
    else if (key == "lambda")
    {
        c.lambda = to_double(value, "lambda");
    }
    else if (key == "simd-width")
    {
        c.simd_width = to_int(value, "simd-width");
    }
    else if (key == "qpoints")
    {
        if (value.empty())
        {
            c.qpoints.reset();
        }
        else
        {
            c.qpoints = parse_qpoints(value);
        }
    }
    else if (key == "reps")
    {
        c.reps = to_int(value, "reps");
    }
    else if (key == "warmup")
    {
        c.warmup = to_int(value, "warmup");
    }
    else if (key == "amplitude")
    {
        c.amplitude = to_double(value, "amplitude");
    }
    else
    {
        throw ConfigError("unknown compare key '" + key + "'");
    }
}

BenchConfig bench_config(const Options &o)
{
    BenchConfig c;
    apply_key(c, "op", o.op.empty() ? "helmholtz" : o.op);
    apply_key(c, "shape", o.shape);
    apply_key(c, "order", o.order);
    apply_key(c, "nelem", o.nelem);
    apply_key(c, "strategy", o.strategy);
    apply_key(c, "geometry", o.geometry);
    apply_key(c, "form", o.form);
    apply_key(c, "qpoints", o.qpoints);
    c.lambda = o.lambda;
    c.simd_width = o.simd_width;
    c.reps = o.reps;
    c.warmup = o.warmup;
    c.seed = o.seed;
    c.amplitude = o.amplitude;
    validate(c);
    return c;
}

BenchConfig overlay(BenchConfig c, const std::vector<std::string> &pairs)
{
    for (const auto &kv : pairs)
    {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
        {
            throw ConfigError("expected key=value, got '" + kv + "'");
        }
        apply_key(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate(c);
    return c;
}

void write_lines(const std::string &path, const std::string &header, const std::vector<std::string> &rows)
{
    std::ofstream f(path);
    if (!f)
    {
        throw ConfigError("cannot open '" + path + "' for writing");
    }
    f << header << '\n';
    for (const auto &r : rows)
    {
        f << r << '\n';
    }
}

int cmd_bench(const Options &o)
{
    const BenchConfig c = bench_config(o);
    ThreadPool pool(resolve_thread_count(o.threads));
    std::cout << csv_header() << '\n';
    const auto records = run_bench(c, &pool, &std::cout);
    std::vector<std::string> rows;
    for (const auto &r : records)
    {
        rows.push_back(csv_row(r));
        if (o.raw)
        {
            std::cerr << "raw," << to_string(r.shape) << ',' << r.order << ',' << to_string(r.strategy) << ','
                      << r.nelem << ",iters=" << r.iterations;
            for (double t : r.batch_seconds)
            {
                std::cerr << ',' << t;
            }
            std::cerr << '\n';
        }
    }
    if (!o.csv.empty())
    {
        write_lines(o.csv, csv_header(), rows);
    }
    return 0;
}

int cmd_verify(const Options &o, const CLI::App &app)
{
    VerifyScope scope;
    auto given = [&](const char *name) { return app.count(name) > 0; };
    if (given("--shape"))
    {
        scope.shapes = parse_shapes(o.shape);
    }
    if (given("--op"))
    {
        scope.ops.clear();
        for (const auto &t : split(o.op))
        {
            scope.ops.push_back(parse_bench_op(t));
        }
    }
    if (given("--geometry"))
    {
        scope.geometries.clear();
        for (const auto &t : split(o.geometry))
        {
            scope.geometries.push_back(parse_geometry(t));
        }
    }
    if (given("--strategy"))
    {
        scope.strategies = parse_strategies(o.strategy);
    }
    if (given("--order"))
    {
        std::tie(scope.order_min, scope.order_max) = parse_order(o.order);
    }
    if (given("--lambda"))
    {
        scope.lambdas = {o.lambda};
    }
    scope.simd_width = o.simd_width;
    scope.seed = o.seed;
    if (o.inject_fault)
    {
        testing::set_collapsed_metric_fault(true);
    }
    const VerifyReport report = run_verify(scope, &std::cout);
    const int failures = report.failures();
    std::cout << report.cases.size() << " cases, " << failures << " failed\n";
    if (!o.csv.empty())
    {
        std::vector<std::string> rows;
        for (const auto &vc : report.cases)
        {
            std::ostringstream s;
            s << (vc.passed ? "PASS" : "FAIL") << ',' << vc.label << ',' << vc.max_rel_error;
            rows.push_back(s.str());
        }
        write_lines(o.csv, "status,case,max_rel_err", rows);
    }
    return failures > 0 ? 1 : 0;
}

int cmd_compare(const Options &o)
{
    const BenchConfig base = bench_config(o);
    const BenchConfig a = overlay(base, o.a);
    const BenchConfig b = overlay(base, o.b);
    ThreadPool pool(resolve_thread_count(o.threads));
    const auto rows = run_compare(a, b, &pool, nullptr);
    std::vector<std::string> lines;
    std::cout << compare_csv_header() << '\n';
    for (const auto &r : rows)
    {
        lines.push_back(compare_csv_row(r));
        std::cout << lines.back() << '\n';
    }
    if (!o.csv.empty())
    {
        write_lines(o.csv, compare_csv_header(), lines);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Matrix-free spectral/hp element operator benchmark"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; command-line flags take precedence");

    Options o;
    app.add_option("--op", o.op, "mass, helmholtz or bwdtrans (verify: comma list)");
    app.add_option("--shape", o.shape, "comma list of quad,tri,hex,prism,pyr,tet or 'all'");
    app.add_option("--order", o.order, "polynomial order range a..b");
    app.add_option("--nelem", o.nelem, "comma list of element counts");
    app.add_option("--strategy", o.strategy, "comma list of StdMat,StdMatGrouped,SumFac");
    app.add_option("--geometry", o.geometry, "regular or deformed");
    app.add_option("--form", o.form, "Helmholtz form: coll or noncoll (default per strategy)");
    app.add_option("--lambda", o.lambda, "Helmholtz lambda");
    app.add_option("--simd-width", o.simd_width, "elements per interleaved group (0 = target default)");
    app.add_option("--qpoints", o.qpoints, "quadrature points per direction: Q or Q0,Q1,Q2");
    app.add_option("--reps", o.reps, "timed batches per record (>= 3)");
    app.add_option("--warmup", o.warmup, "warmup batches (>= 1)");
    app.add_option("--seed", o.seed, "seed for geometry and inputs");
    app.add_option("--threads", o.threads, "worker threads (fallback: SPECKERN_THREADS, then 1)");
    app.add_option("--amplitude", o.amplitude, "deformation amplitude for deformed geometry (<= 0.1)");
    app.add_option("--csv", o.csv, "also write the table to this file");
    app.add_flag("--raw", o.raw, "print raw batch timings to stderr");
    app.add_flag("--inject-g-fault", o.inject_fault)->group("");

    auto *bench = app.add_subcommand("bench", "time operator applications and print CSV")->fallthrough();
    auto *verify = app.add_subcommand("verify", "check operators against dense elemental matrices")->fallthrough();
    auto *compare = app.add_subcommand("compare", "throughput ratio of two configurations")->fallthrough();
    compare->add_option("--a", o.a, "key=value overrides for configuration A")->take_all();
    compare->add_option("--b", o.b, "key=value overrides for configuration B")->take_all();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (*bench)
        {
            return cmd_bench(o);
        }
        if (*verify)
        {
            return cmd_verify(o, app);
        }
        if (*compare)
        {
            return cmd_compare(o);
        }
    }
    catch (const VerificationError &e)
    {
        std::cerr << "verification failed: " << e.what() << '\n';
        return 1;
    }
    catch (const Error &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
