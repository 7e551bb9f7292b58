// mfscope: command-line front end for manifold geometry estimation.
//
//   mfscope generate   --family swiss-roll --d 2 --ambient 3 --n 2500 --seed 7 --out roll.csv
//   mfscope graph      --in roll.csv --graph nnk --out-dir out/
//   mfscope id         --in roll.csv --graph nnk --out-dir out/
//   mfscope diameters  --in roll.csv --out-dir out/
//   mfscope angles     --in roll.csv --pairs 1000 --seed 1 --out-dir out/
//   mfscope multiscale --in roll.csv --policy nnk --scales 10 --steps 100 --out-dir out/
//
// Exit codes: 0 success, 1 internal failure, 2 invalid input or config,
// 3 degenerate data.

#include <mfscope/mfscope.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mfscope;

namespace {

struct Options {
    // input / output
    std::string in;
    std::string out;
    std::string out_dir = ".";
    std::string format = "csv";
    bool header = false;
    // generator
    std::string family = "flat";
    Index d = 2;
    Index ambient = 3;
    Index n = 1000;
    double noise = 0.0;
    std::string embed = "linear-isometric";
    std::uint64_t seed = 0;
    // graphs
    Index k = 100;
    std::string sigma = "knn-median:0/3";
    std::string graph = "nnk";
    std::size_t workers = 0;
    // local geometry
    std::string centering = "query";
    double ratio = 0.1;
    bool exclude_center = false;
    Index pairs = 1000;
    // multiscale
    std::string policy = "nnk";
    Index scales = 10;
    Index steps = 100;
    bool no_angles = false;
    bool no_id = false;
};

// Keys accepted in --config files; identical to the long flag names.
void apply_config(Options& o, const json& j)
{
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key) && !j.at(key).is_null())
            field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("in", o.in);
    take("out", o.out);
    take("out-dir", o.out_dir);
    take("format", o.format);
    take("header", o.header);
    take("family", o.family);
    take("d", o.d);
    take("ambient", o.ambient);
    take("n", o.n);
    take("noise", o.noise);
    take("embed", o.embed);
    take("seed", o.seed);
    take("k", o.k);
    take("sigma", o.sigma);
    take("graph", o.graph);
    take("workers", o.workers);
    take("centering", o.centering);
    take("ratio", o.ratio);
    take("exclude-center", o.exclude_center);
    take("pairs", o.pairs);
    take("policy", o.policy);
    take("scales", o.scales);
    take("steps", o.steps);
    take("no-angles", o.no_angles);
    take("no-id", o.no_id);
}

json resolved_config(const Options& o, const std::string& command)
{
    json c;
    if (command == "generate") {
        c = {{"family", o.family}, {"d", o.d}, {"ambient", o.ambient}, {"n", o.n}, {"noise", o.noise},
             {"embed", o.embed}, {"seed", o.seed}, {"out", o.out}, {"format", o.format}};
        return c;
    }
    c = {{"in", o.in}, {"format", o.format}, {"header", o.header}, {"k", o.k}, {"sigma", o.sigma},
         {"workers", o.workers}};
    if (command == "graph")
        c["graph"] = o.graph;
    if (command == "id") {
        c["graph"] = o.graph;
        c["centering"] = o.centering;
        c["ratio"] = o.ratio;
        c["pairs"] = o.pairs;
        c["seed"] = o.seed;
        c["exclude-center"] = o.exclude_center;
    }
    if (command == "diameters")
        c["exclude-center"] = o.exclude_center;
    if (command == "angles") {
        c["centering"] = o.centering;
        c["ratio"] = o.ratio;
        c["pairs"] = o.pairs;
        c["seed"] = o.seed;
    }
    if (command == "multiscale") {
        c["policy"] = o.policy;
        c["scales"] = o.scales;
        c["steps"] = o.steps;
        c["centering"] = o.centering;
        c["ratio"] = o.ratio;
        c["pairs"] = o.pairs;
        c["seed"] = o.seed;
        c["exclude-center"] = o.exclude_center;
        c["no-angles"] = o.no_angles;
        c["no-id"] = o.no_id;
    }
    c["out-dir"] = o.out_dir;
    return c;
}

// nlohmann writes NaN/Inf as null already; this keeps the intent explicit.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Shortest round-trip text, used for quantile-level keys ("0.1", not "0.10000000000000001").
std::string key(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
json opt(const std::optional<T>& v)
{
    if (!v)
        return nullptr;
    if constexpr (std::is_floating_point_v<T>)
        return num(*v);
    else
        return *v;
}

json number_array(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v)
        a.push_back(num(x));
    return a;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot create '" + path.string() + "'");
    out << text;
    if (!out)
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

template <class Writer>
void write_stream(const fs::path& path, Writer&& writer)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot create '" + path.string() + "'");
    writer(out);
    if (!out)
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
}

fs::path prepare_out_dir(const Options& o)
{
    fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorKind::io, "cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_manifest(const fs::path& dir, const Options& o, const std::string& command)
{
    write_json(dir / "manifest.json",
               {{"tool", "mfscope"}, {"version", mfscope::version}, {"command", command},
                {"config", resolved_config(o, command)}});
}

FileFormat file_format(const std::string& name)
{
    const auto f = parse_format(name);
    if (!f)
        throw Error(ErrorKind::invalid_config, "unknown format '" + name + "' (csv or bin)");
    return *f;
}

PointCloud load_input(const Options& o)
{
    if (o.in.empty())
        throw Error(ErrorKind::invalid_config, "--in is required");
    return load_points(o.in, file_format(o.format), o.header);
}

GraphConfig graph_config(const Options& o)
{
    GraphConfig g;
    g.k = o.k;
    g.kernel = parse_sigma_rule(o.sigma);
    g.workers = o.workers;
    return g;
}

GraphKind graph_kind(const Options& o)
{
    const auto k = parse_graph_kind(o.graph);
    if (!k)
        throw Error(ErrorKind::invalid_config, "unknown graph kind '" + o.graph + "' (knn or nnk)");
    return *k;
}

LocalPcaOptions pca_options(const Options& o)
{
    LocalPcaOptions p;
    if (o.centering == "query")
        p.centering = Centering::query;
    else if (o.centering == "mean")
        p.centering = Centering::mean;
    else
        throw Error(ErrorKind::invalid_config, "unknown centering '" + o.centering + "' (query or mean)");
    if (!(o.ratio > 0.0 && o.ratio <= 1.0))
        throw Error(ErrorKind::invalid_config, "--ratio must lie in (0, 1]");
    p.ratio = o.ratio;
    return p;
}

json diameter_json(const DiameterStats& d)
{
    json q = json::object();
    for (std::size_t i = 0; i < d.quantile_levels.size(); ++i)
        q[key(d.quantile_levels[i])] = num(d.quantiles[i]);
    return {{"mean", num(d.mean)},
            {"median", num(d.median)},
            {"quantiles", q},
            {"histogram", {{"edges", number_array(d.histogram.edges)}, {"counts", d.histogram.counts}}}};
}

json angle_json(const AngleSummary& s)
{
    return {{"mean_adjacent", num(s.mean_adjacent)},
            {"mean_random", num(s.mean_random)},
            {"ks_adjacent_vs_random", num(s.ks_adjacent_vs_random)},
            {"n_adjacent_pairs", s.n_adjacent_pairs},
            {"n_random_pairs", s.n_random_pairs}};
}

json id_histogram(const IdEstimate& est)
{
    std::map<Index, Index> h;
    for (const auto& v : est.per_node)
        if (v)
            ++h[*v];
    json out = json::object();
    for (auto [dim, count] : h)
        out[std::to_string(dim)] = count;
    return out;
}

// --- commands --------------------------------------------------------------

void cmd_generate(Options o)
{
    ManifoldSpec spec;
    const auto fam = parse_family(o.family);
    if (!fam)
        throw Error(ErrorKind::invalid_spec, "unknown family '" + o.family + "'");
    const auto emb = parse_embedding(o.embed);
    if (!emb)
        throw Error(ErrorKind::invalid_spec, "unknown embedding '" + o.embed + "'");
    spec.family = *fam;
    spec.intrinsic_dim = o.d;
    spec.ambient_dim = o.ambient;
    spec.n_points = o.n;
    spec.noise_sigma = o.noise;
    spec.embed = *emb;
    spec.rng_seed = o.seed;
    const FileFormat format = file_format(o.format);

    const PointCloud cloud = generate(spec);
    fs::path out = o.out.empty() ? fs::path(o.out_dir) / (format == FileFormat::csv ? "points.csv" : "points.bin")
                                 : fs::path(o.out);
    if (o.out_dir == "." && out.has_parent_path())
        o.out_dir = out.parent_path().string();
    const fs::path dir = prepare_out_dir(o);
    o.out = out.string();
    save_points(cloud, out, format);
    write_manifest(dir, o, "generate");
    std::cout << out.string() << "\n";
}

void cmd_graph(const Options& o)
{
    const PointCloud cloud = load_input(o);
    const GraphKind kind = graph_kind(o);
    const GraphConfig cfg = graph_config(o);
    const fs::path dir = prepare_out_dir(o);
    const BuiltGraph g = build_graph(cloud, kind, cfg);

    json summary;
    if (kind == GraphKind::knn) {
        write_stream(dir / "edges.csv", [&](std::ostream& s) { write_knn_edges(s, g.knn); });
        summary = {{"kind", "knn"}, {"n_nodes", cloud.size()}, {"initial_K", g.knn.k}};
    } else {
        write_stream(dir / "edges.csv", [&](std::ostream& s) { write_nnk_edges(s, *g.nnk); });
        const NnkSummary s = summarize(*g.nnk);
        summary = {{"kind", "nnk"},
                   {"n_nodes", s.n_nodes},
                   {"sigma", num(s.sigma)},
                   {"initial_K", s.initial_k},
                   {"mean_support_size", num(s.mean_support_size)},
                   {"residual_quantiles", number_array(s.residual_quantiles)}};
    }
    write_json(dir / "summary.json", summary);
    write_manifest(dir, o, "graph");
}

void cmd_id(const Options& o)
{
    const PointCloud cloud = load_input(o);
    const GraphKind kind = graph_kind(o);
    const GraphConfig cfg = graph_config(o);
    const LocalPcaOptions pca = pca_options(o);
    const fs::path dir = prepare_out_dir(o);

    const BuiltGraph g = build_graph(cloud, kind, cfg);
    const Neighborhoods hoods = kind == GraphKind::nnk ? neighborhoods_of(*g.nnk) : neighborhoods_of(g.knn);
    const BasisSet bases = compute_bases(cloud, hoods, pca, cfg.workers);
    const IdEstimate est = estimate_id_from_bases(bases);

    write_stream(dir / "id_per_node.csv", [&](std::ostream& s) { write_node_values(s, est.per_node); });
    json report = {{"graph", std::string(to_string(kind))},
                   {"n_nodes", cloud.size()},
                   {"mean_id", num(est.mean_id)},
                   {"median_id", num(est.median_id)},
                   {"id_histogram", id_histogram(est)},
                   {"skipped_nodes", est.skipped},
                   {"unreliable", est.unreliable},
                   {"sigma", opt(g.sigma)},
                   {"per_node_csv", "id_per_node.csv"},
                   {"diameter_quantiles", nullptr},
                   {"ks_adjacent_vs_random", nullptr}};
    if (est.unreliable)
        std::cerr << "warning: more than 10% of neighborhoods have zero scatter; estimate unreliable\n";
    if (kind == GraphKind::nnk) {
        const DiameterStats d = diameters(cloud, hoods, !o.exclude_center, cfg.workers);
        report["diameter_quantiles"] = diameter_json(d)["quantiles"];
        const auto dist = angle_distributions(*g.nnk, bases.bases, o.pairs, o.seed, cfg.workers);
        report["ks_adjacent_vs_random"] = num(summarize(dist).ks_adjacent_vs_random);
    }
    write_json(dir / "id.json", report);
    write_manifest(dir, o, "id");
    std::cout << "mean_id " << format_double(est.mean_id) << "\n";
}

void cmd_diameters(const Options& o)
{
    const PointCloud cloud = load_input(o);
    const GraphConfig cfg = graph_config(o);
    const fs::path dir = prepare_out_dir(o);
    const BuiltGraph g = build_graph(cloud, GraphKind::nnk, cfg);
    const DiameterStats d = diameters(cloud, neighborhoods_of(*g.nnk), !o.exclude_center, cfg.workers);
    write_stream(dir / "diameters.csv", [&](std::ostream& s) { write_node_values(s, d.per_node); });
    json summary = diameter_json(d);
    summary["sigma"] = opt(g.sigma);
    summary["max"] = d.quantiles.empty() ? json(nullptr) : num(d.quantiles.back());
    write_json(dir / "diameters.json", summary);
    write_manifest(dir, o, "diameters");
}

void cmd_angles(const Options& o)
{
    const PointCloud cloud = load_input(o);
    const GraphConfig cfg = graph_config(o);
    const LocalPcaOptions pca = pca_options(o);
    const fs::path dir = prepare_out_dir(o);
    const BuiltGraph g = build_graph(cloud, GraphKind::nnk, cfg);
    const BasisSet bases = compute_bases(cloud, neighborhoods_of(*g.nnk), pca, cfg.workers);
    const auto dist = angle_distributions(*g.nnk, bases.bases, o.pairs, o.seed, cfg.workers);
    if (dist.adjacent.empty())
        std::cerr << "warning: NNK graph has no usable edges; adjacent sample is empty\n";
    write_stream(dir / "angles.csv", [&](std::ostream& s) { write_angle_samples(s, dist); });

    auto quantiles = [](const std::vector<double>& v) {
        json q = json::object();
        const auto s = stats::sorted_copy(v);
        for (double level : {0.0, 0.25, 0.5, 0.75, 1.0})
            q[key(level)] = num(stats::quantile_sorted(s, level));
        return q;
    };
    json summary = angle_json(summarize(dist));
    summary["adjacent_quantiles"] = quantiles(AngleDistributions::flatten(dist.adjacent));
    summary["random_quantiles"] = quantiles(AngleDistributions::flatten(dist.random));
    summary["sigma"] = opt(g.sigma);
    write_json(dir / "angles.json", summary);
    write_manifest(dir, o, "angles");
}

void cmd_multiscale(const Options& o)
{
    const PointCloud cloud = load_input(o);
    MergeConfig cfg;
    const auto policy = parse_policy(o.policy);
    if (!policy)
        throw Error(ErrorKind::invalid_config, "unknown policy '" + o.policy + "' (knn or nnk)");
    cfg.similarity = *policy;
    cfg.steps_per_scale = o.steps;
    cfg.n_scales = o.scales;
    cfg.graph = graph_config(o);
    validate(cfg, cloud.size());

    MetricSelection metrics;
    metrics.id_knn = metrics.id_nnk = !o.no_id;
    metrics.angles = !o.no_angles;
    metrics.n_random_pairs = o.pairs;
    metrics.seed = o.seed;
    metrics.pca = pca_options(o);
    metrics.include_center = !o.exclude_center;
    const fs::path dir = prepare_out_dir(o);

    const ScaleTrace trace = run_multiscale(cloud, cfg, metrics);

    json records = json::array();
    for (const auto& rec : trace.scales) {
        json r = {{"scale", rec.scale},
                  {"n_points", rec.n_points},
                  {"sigma", opt(rec.sigma)},
                  {"mean_id_knn", opt(rec.mean_id_knn)},
                  {"mean_id_nnk", opt(rec.mean_id_nnk)},
                  {"diameter_summary", nullptr},
                  {"angle_summary", nullptr},
                  {"n_merged", rec.merged_pairs.size()},
                  {"warnings", rec.warnings}};
        if (rec.diameter_summary) {
            json q = json::object();
            for (std::size_t i = 0; i < rec.diameter_summary->quantile_levels.size(); ++i)
                q[key(rec.diameter_summary->quantile_levels[i])] = num(rec.diameter_summary->quantiles[i]);
            r["diameter_summary"] = {{"mean", num(rec.diameter_summary->mean)},
                                     {"median", num(rec.diameter_summary->median)},
                                     {"quantiles", q}};
        }
        if (rec.angle_summary)
            r["angle_summary"] = angle_json(*rec.angle_summary);
        for (const auto& w : rec.warnings)
            std::cerr << "warning: scale " << rec.scale << ": " << w << "\n";
        records.push_back(std::move(r));

        if (!rec.diameters.empty()) {
            write_stream(dir / ("diameters_scale_" + std::to_string(rec.scale) + ".csv"), [&](std::ostream& s) {
                s << "node,value\n";
                for (std::size_t i = 0; i < rec.diameters.size(); ++i)
                    s << i << ',' << format_double(rec.diameters[i]) << '\n';
            });
        }
    }
    write_json(dir / "scale_trace.json", records);
    write_stream(dir / "merged_pairs.csv", [&](std::ostream& s) { write_merged_pairs(s, trace); });

    json shift = nullptr;
    const auto& first = trace.scales.front();
    const auto& last = trace.scales.back();
    if (!first.diameters.empty() && !last.diameters.empty()) {
        try {
            shift = num(normalized_diameter_shift(first.diameters, last.diameters));
        } catch (const Error& e) {
            std::cerr << "warning: diameter shift: " << e.what() << "\n";
        }
    }
    write_json(dir / "multiscale_summary.json", {{"policy", o.policy},
                                                 {"initial_n_points", first.n_points},
                                                 {"final_n_points", last.n_points},
                                                 {"diameter_shift", shift}});
    write_manifest(dir, o, "multiscale");
    std::cout << "final_n_points " << last.n_points << "\n";
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::degenerate_bandwidth:
    case ErrorKind::degenerate_neighborhood:
    case ErrorKind::zero_scatter:
    case ErrorKind::cannot_merge:
        return 3;
    case ErrorKind::solver_failure:
        return 1;
    default:
        return 2;
    }
}

std::optional<std::string> find_config_path(int argc, char** argv)
{
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc)
            return std::string(argv[i + 1]);
        if (a.rfind("--config=", 0) == 0)
            return a.substr(9);
    }
    return std::nullopt;
}

} // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Local manifold geometry from NNK graphs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mfscope::version);
    std::string config_path;

    auto add_common = [&](CLI::App* sub, bool input) {
        sub->add_option("--config", config_path, "JSON config file; flags take precedence");
        sub->add_option("--out-dir", o.out_dir, "Output directory");
        sub->add_option("--format", o.format, "Point file format: csv or bin");
        if (input) {
            sub->add_option("--in", o.in, "Input point file");
            sub->add_flag("--header", o.header, "Skip one header line when reading CSV");
            sub->add_option("--k", o.k, "Initial KNN size");
            sub->add_option("--sigma", o.sigma, "fixed:<v> | knn-median:<rank>[/<divisor>] (rank 0 = K)");
            sub->add_option("--workers", o.workers, "Worker threads (0 = hardware)");
        }
    };

    auto* gen = app.add_subcommand("generate", "Sample a synthetic manifold");
    add_common(gen, false);
    gen->add_option("--family", o.family, "flat|hypercube|sphere|swiss-roll|helix|two-density-flat");
    gen->add_option("--d", o.d, "Intrinsic dimension");
    gen->add_option("--ambient", o.ambient, "Ambient dimension");
    gen->add_option("--n", o.n, "Number of points");
    gen->add_option("--noise", o.noise, "Gaussian noise scale");
    gen->add_option("--embed", o.embed, "linear-isometric|random-rotation");
    gen->add_option("--seed", o.seed, "Random seed");
    gen->add_option("--out", o.out, "Output point file");

    auto* graph = app.add_subcommand("graph", "Build a KNN or NNK graph");
    add_common(graph, true);
    graph->add_option("--graph,--kind", o.graph, "knn or nnk");

    auto* id = app.add_subcommand("id", "Estimate intrinsic dimension");
    add_common(id, true);
    id->add_option("--graph", o.graph, "Neighborhoods: knn or nnk");
    id->add_option("--centering", o.centering, "query or mean");
    id->add_option("--ratio", o.ratio, "Eigenvalue significance ratio");
    id->add_option("--pairs", o.pairs, "Random pairs for the angle KS summary");
    id->add_option("--seed", o.seed, "Random seed");
    id->add_flag("--exclude-center", o.exclude_center, "Diameters over neighbors only");

    auto* diam = app.add_subcommand("diameters", "NNK polytope diameters");
    add_common(diam, true);
    diam->add_flag("--exclude-center", o.exclude_center, "Diameters over neighbors only");

    auto* ang = app.add_subcommand("angles", "Principal angles between NNK subspaces");
    add_common(ang, true);
    ang->add_option("--pairs", o.pairs, "Number of random pairs");
    ang->add_option("--seed", o.seed, "Random seed");
    ang->add_option("--centering", o.centering, "query or mean");
    ang->add_option("--ratio", o.ratio, "Eigenvalue significance ratio");

    auto* ms = app.add_subcommand("multiscale", "Two-closest merging across scales");
    add_common(ms, true);
    ms->add_option("--policy", o.policy, "Merge similarity: knn or nnk");
    ms->add_option("--scales", o.scales, "Number of scales");
    ms->add_option("--steps", o.steps, "Merges per scale");
    ms->add_option("--pairs", o.pairs, "Random pairs per scale");
    ms->add_option("--seed", o.seed, "Random seed");
    ms->add_option("--centering", o.centering, "query or mean");
    ms->add_option("--ratio", o.ratio, "Eigenvalue significance ratio");
    ms->add_flag("--exclude-center", o.exclude_center, "Diameters over neighbors only");
    ms->add_flag("--no-angles", o.no_angles, "Skip the angle metrics");
    ms->add_flag("--no-id", o.no_id, "Skip the ID metrics");

    try {
        if (const auto path = find_config_path(argc, argv)) {
            std::ifstream in(*path);
            if (!in)
                throw Error(ErrorKind::io, "cannot open config '" + *path + "'");
            json j;
            try {
                j = json::parse(in);
                apply_config(o, j);
            } catch (const json::exception& e) {
                throw Error(ErrorKind::invalid_config, std::string("config '") + *path + "': " + e.what());
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            cmd_generate(o);
        else if (graph->parsed())
            cmd_graph(o);
        else if (id->parsed())
            cmd_id(o);
        else if (diam->parsed())
            cmd_diameters(o);
        else if (ang->parsed())
            cmd_angles(o);
        else if (ms->parsed())
            cmd_multiscale(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
