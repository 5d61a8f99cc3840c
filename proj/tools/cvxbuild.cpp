// Command line front end: scene checks, canned reproductions and figures.

#include "cvxbuild/scene.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

#ifndef CVXBUILD_SCENES_DIR
#define CVXBUILD_SCENES_DIR "scenes"
#endif

using namespace cvxbuild;

namespace {

struct Options {
    std::string scene;
    std::string scenes_dir = CVXBUILD_SCENES_DIR;
    std::string filter;
    std::string mode;
    std::optional<int> samples;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::string svg;
    std::string json;
};

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

// Prints or stores the report; returns the exit code for the verdicts.
int finish(const Options& o, const Scene& s, const RunReport& r, Json extra = Json::object())
{
    Json j = r.to_json();
    for (auto& [k, v] : extra.items()) j[k] = v;
    if (!o.svg.empty()) write_file(o.svg, emit_svg(s, r));
    if (!o.json.empty()) {
        write_file(o.json, j.dump(2) + "\n");
        for (const auto& c : r.reports) std::cout << (c.verdict ? "pass " : "FAIL ") << c.check << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return r.verdict() ? 0 : 1;
}

int run_checks(const Options& o, std::vector<std::string> checks)
{
    Scene s = load_scene(o.scene);
    RunOverrides ov;
    ov.samples = o.samples;
    ov.tol = o.tol;
    ov.seed = o.seed;
    if (!o.mode.empty()) ov.mode = o.mode == "two" ? WallMode::two_closest : WallMode::all_walls;
    if (s.is_circle())
        std::erase_if(checks, [](const std::string& c) { return c != "local" && c != "global" && c != "length_metric"; });
    if (checks.empty()) throw InputError("no applicable checks for this scene");
    ov.checks = checks;
    return finish(o, s, run_scene(s, ov));
}

int repro(const Options& o)
{
    const std::filesystem::path dir(o.scenes_dir);
    const auto path = dir / (o.scene + ".json");
    if (!std::filesystem::exists(path)) throw InputError("unknown scenario '" + o.scene + "'");
    Scene s = load_scene(path);
    RunOverrides ov;
    ov.samples = o.samples;
    ov.tol = o.tol;
    ov.seed = o.seed;
    if (!o.mode.empty()) ov.mode = o.mode == "two" ? WallMode::two_closest : WallMode::all_walls;
    RunReport r = run_scene(s, ov);
    const auto expected = dir / (o.scene + ".expected.json");
    if (!std::filesystem::exists(expected)) return finish(o, s, r);
    std::ifstream in(expected);
    Json want = Json::parse(in, nullptr, false);
    if (want.is_discarded()) throw InputError("malformed " + expected.filename().string());
    std::string why;
    bool ok = matches_expected(r, want, &why);
    Json extra{{"expected_match", ok}};
    if (!ok) extra["mismatch"] = why;
    finish(o, s, r, extra);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Convexity checks for subsets of euclidean buildings"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* c, bool with_mode) {
        c->add_option("--samples", o.samples, "random samples (default 1000)")->check(CLI::NonNegativeNumber);
        c->add_option("--tol", o.tol, "numeric tolerance (default 1e-9)")->check(CLI::PositiveNumber);
        c->add_option("--seed", o.seed, "random seed");
        c->add_option("--svg", o.svg, "write an SVG picture");
        c->add_option("--json", o.json, "write the JSON report here");
        if (with_mode) c->add_option("--mode", o.mode, "wall mode")->check(CLI::IsMember({"all", "two"}));
    };
    auto scene_cmd = [&](const char* name, const char* help, bool with_mode = false) {
        CLI::App* c = app.add_subcommand(name, help);
        c->add_option("scene", o.scene, "scene file")->required();
        common(c, with_mode);
        return c;
    };

    auto* validate = scene_cmd("validate", "validate the atlas");
    auto* normal = scene_cmd("check-normal", "normal condition of the set");
    auto* weak = scene_cmd("check-weak-normal", "weak normal condition of the set", true);
    auto* pre = scene_cmd("preimage", "preimage under the retraction, checked by sampling");
    auto* convex = scene_cmd("verify-convex", "local and global convexity of the set");
    auto* ascend = scene_cmd("ascend", "ascending propagation along the scene's geodesics");
    CLI::App* rep = app.add_subcommand("repro", "run a shipped scenario against its expected verdicts");
    rep->add_option("name", o.scene, "scenario name")->required();
    rep->add_option("--scenes-dir", o.scenes_dir, "scenario directory");
    common(rep, true);
    CLI::App* list = app.add_subcommand("list", "list shipped scenarios");
    list->add_option("filter", o.filter, "substring filter");
    list->add_option("--scenes-dir", o.scenes_dir, "scenario directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) return run_checks(o, {"validate"});
        if (*normal) return run_checks(o, {"normal"});
        if (*weak) return run_checks(o, {"weak_normal"});
        if (*pre) return run_checks(o, {"preimage"});
        if (*convex) return run_checks(o, {"local", "global"});
        if (*ascend) return run_checks(o, {"ascend"});
        if (*rep) return repro(o);
        if (*list) {
            for (const auto& n : list_scenarios(o.scenes_dir, o.filter)) std::cout << n << "\n";
            return 0;
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
