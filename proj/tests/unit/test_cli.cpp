#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "cli/cli.hpp"
#include "cli/report.hpp"
#include "cli/svg.hpp"
#include "hac24/ingest.hpp"

namespace fs = std::filesystem;
using namespace hac24;
using namespace hac24::cli;
using boost::property_tree::ptree;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) {
        dir = fs::temp_directory_path() / ("hac24_cli_" + tag + "_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

struct Result {
    int code = 0;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "hac24");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Table table_at(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    return read_json(in);
}

double num(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
    FAIL("cell is not numeric");
    return 0.0;
}

std::string str(const Cell& c) {
    const auto* s = std::get_if<std::string>(&c);
    REQUIRE(s != nullptr);
    return *s;
}

ptree parse_svg(const std::string& text) {
    std::istringstream in(text);
    ptree t;
    boost::property_tree::read_xml(in, t);
    return t;
}

void collect(const ptree& t, const std::string& name, std::vector<const ptree*>& out) {
    for (const auto& [k, v] : t) {
        if (k == name) out.push_back(&v);
        collect(v, name, out);
    }
}

std::string attr(const ptree& node, const std::string& a) { return node.get<std::string>("<xmlattr>." + a, ""); }

void write_spec(const std::string& path, const SimulationSpec& spec) {
    std::ofstream out(path);
    write_simulation_spec(out, spec);
}

SimulationSpec separated_spec() {
    auto s = default_simulation_spec();
    s.profiles = {
        {0.3, {6.5, 6.5, 2.6}, {0.5, 0.5, 0.3}, {-0.3, 0.0, 0.0}},
        {0.4, {10.0, 4.0, 1.4}, {0.5, 0.4, 0.2}, {-0.3, 0.0, 0.0}},
        {0.3, {13.0, 2.0, 0.6}, {0.5, 0.3, 0.1}, {-0.3, 0.0, 0.0}},
    };
    s.class_effects = {0.0, 0.2, -0.3};
    return s;
}

}  // namespace

TEST_CASE("table writers round trip") {
    Table t{"demo", {"name", "n", "x", "flag", "blank"}, {}};
    t.add({std::string("a, \"quoted\" one"), 12LL, 0.1 + 0.2, true, std::monostate{}});
    t.add({std::string("plain"), -3LL, -1.25e-9, false, std::monostate{}});

    std::ostringstream js;
    write_json(js, t);
    std::istringstream jin(js.str());
    const Table j = read_json(jin);
    CHECK(j.name == "demo");
    CHECK(j.columns == t.columns);
    REQUIRE(j.rows.size() == 2);
    for (std::size_t r = 0; r < 2; ++r) CHECK(j.rows[r] == t.rows[r]);

    std::ostringstream cs;
    write_csv(cs, t);
    std::istringstream cin(cs.str());
    const Table c = read_csv(cin, "demo");
    CHECK(c.columns == t.columns);
    REQUIRE(c.rows.size() == 2);
    CHECK(str(c.rows[0][0]) == "a, \"quoted\" one");
    CHECK(num(c.rows[0][1]) == 12.0);
    CHECK(num(c.rows[0][2]) == 0.1 + 0.2);
    CHECK(num(c.rows[1][2]) == -1.25e-9);
    CHECK(str(c.rows[1][3]) == "false");
    CHECK(std::holds_alternative<std::monostate>(c.rows[1][4]));
    std::ostringstream again;
    write_csv(again, c);
    CHECK(again.str() == cs.str());

    std::istringstream broken("{\"table\": 3");
    CHECK_THROWS(read_json(broken));
}

TEST_CASE("range parsing") {
    CHECK(parse_int_range("2:6") == std::vector<int>{2, 3, 4, 5, 6});
    CHECK(parse_int_range("3") == std::vector<int>{3});
    CHECK(parse_int_range("2,4,5") == std::vector<int>{2, 4, 5});
    CHECK_THROWS(parse_int_range("6:2"));
    CHECK_THROWS(parse_int_range("x"));
    const auto g = parse_delta_grid("-10:10:5");
    CHECK(g == std::vector<double>{-10, -5, 0, 5, 10});
    const auto h = parse_delta_grid("-7:7:5");
    CHECK(std::find(h.begin(), h.end(), 0.0) != h.end());
    CHECK_THROWS(parse_delta_grid("5:1:1"));
    CHECK_THROWS(parse_delta_grid("0:1:0"));
}

TEST_CASE("svg figures are well-formed") {
    const std::string tern = ternary_svg({{0.5, 0.3, 0.2}, {0.2, 0.2, 0.6}}, {"sit", "stand", "step & co"}, {0, 1});
    const ptree t = parse_svg(tern);
    std::vector<const ptree*> texts;
    collect(t, "text", texts);
    std::vector<std::string> vertices;
    for (const auto* n : texts) {
        if (attr(*n, "class") == "vertex") vertices.push_back(n->get_value<std::string>());
    }
    CHECK(vertices == std::vector<std::string>{"sit", "stand", "step & co"});

    CurveSeries s{"sit", {-10, 0, 10}, {-0.1, 0, 0.1}, {-0.2, -0.05, 0.0}, {0.0, 0.05, 0.2}};
    const ptree c = parse_svg(curve_svg("t", "x", "y", {s}));
    std::vector<const ptree*> polys;
    collect(c, "polygon", polys);
    CHECK(std::count_if(polys.begin(), polys.end(), [](const ptree* p) { return attr(*p, "class") == "ci-band"; }) == 1);

    const BoxStats b = box_stats({1, 2, 3, 4, 100});
    CHECK(b.median == 3.0);
    CHECK(b.q1 == 2.0);
    CHECK(b.q3 == 4.0);
    CHECK(b.whisker_hi == 4.0);
    CHECK(b.whisker_lo == 1.0);
    CHECK(b.n == 5);
    CHECK(xml_escape("<a&\"b\">") == "&lt;a&amp;&quot;b&quot;&gt;");
}

TEST_CASE("exit codes") {
    Scratch tmp("exit");
    CHECK(call({}).code == kUsage);
    CHECK(call({"describe"}).code == kUsage);
    CHECK(call({"frobnicate"}).code == kUsage);
    CHECK(call({"--help"}).code == kOk);
    CHECK(call({"describe", tmp / "missing.csv", "--out", tmp.dir.string()}).code == kData);

    {
        std::ofstream e(tmp / "empty.csv");
        e << kCohortCsvHeader << '\n';
    }
    const Result empty = call({"describe", tmp / "empty.csv", "--out", tmp.dir.string()});
    CHECK(empty.code == kData);
    CHECK(empty.err.find("empty") != std::string::npos);

    {
        std::ofstream bad(tmp / "bad.csv");
        bad << "person_id,something\nA,1\n";
    }
    CHECK(call({"describe", tmp / "bad.csv", "--out", tmp.dir.string()}).code == kData);

    REQUIRE(call({"simulate", "--n", "50", "--seed", "1", "--out", tmp.dir.string()}).code == kOk);
    CHECK(call({"ism", tmp / "cohort.csv", "--covariates", "height", "--out", tmp.dir.string()}).code == kUsage);
    CHECK(call({"ism", tmp / "cohort.csv", "--minutes", "-5", "--out", tmp.dir.string()}).code == kUsage);
    CHECK(call({"coda", tmp / "cohort.csv", "--pairwise", "--out", tmp.dir.string()}).code == kUsage);
    CHECK(call({"lpa", tmp / "cohort.csv", "--select", "xyz", "--out", tmp.dir.string()}).code == kUsage);
    CHECK(call({"describe", tmp / "cohort.csv", "--format", "xml", "--out", tmp.dir.string()}).code == kUsage);

    // identical persons: every start collapses
    {
        std::ofstream same(tmp / "same.csv");
        same << kCohortCsvHeader << '\n';
        for (int i = 0; i < 30; ++i) same << "S" << i << ",7,600,240,60,540,1440,65-74,1,0,16,25,3,0,0.1,\n";
    }
    const Result num_fail =
        call({"lpa", tmp / "same.csv", "--classes", "2", "--starts", "3", "--out", tmp.dir.string()});
    CHECK(num_fail.code == kNumerical);
}

TEST_CASE("simulate and describe") {
    Scratch tmp("describe");
    REQUIRE(call({"simulate", "--n", "333", "--seed", "42", "--out", tmp.dir.string()}).code == kOk);
    const std::string first = slurp(tmp / "cohort.csv");
    REQUIRE(call({"simulate", "--n", "333", "--seed", "42", "--out", tmp.dir.string()}).code == kOk);
    CHECK(slurp(tmp / "cohort.csv") == first);
    CHECK(load_cohort_csv(tmp / "cohort.csv").size() == 333);

    const std::string spec_path = std::string(HAC24_SOURCE_DIR) + "/data/default_cohort.spec";
    REQUIRE(call({"simulate", spec_path, "--n", "333", "--seed", "42", "--out", tmp.dir.string()}).code == kOk);
    CHECK(slurp(tmp / "cohort.csv") == first);

    REQUIRE(call({"describe", tmp / "cohort.csv", "--out", tmp.dir.string()}).code == kOk);
    REQUIRE(call({"describe", tmp / "cohort.csv", "--format", "csv", "--out", tmp.dir.string()}).code == kOk);
    const Table j = table_at(tmp / "describe.json");
    std::ifstream cin(tmp / "describe.csv");
    const Table c = read_csv(cin, "describe");
    CHECK(j.columns == std::vector<std::string>{"section", "variable", "level", "value", "spread", "q1", "q3", "display"});
    CHECK(c.columns == j.columns);
    REQUIRE(c.rows.size() == j.rows.size());
    const auto d = describe(load_cohort_csv(tmp / "cohort.csv"));
    REQUIRE(j.rows.size() == d.rows.size());
    for (std::size_t r = 0; r < j.rows.size(); ++r) {
        CHECK(str(j.rows[r][1]) == d.rows[r].variable);
        CHECK(str(j.rows[r][7]) == d.rows[r].display);
        if (d.rows[r].value) {
            CHECK(num(j.rows[r][3]) == *d.rows[r].value);
            CHECK(num(c.rows[r][3]) == *d.rows[r].value);
        }
    }

    REQUIRE(call({"simulate", "--n", "40", "--seed", "3", "--days", "--out", tmp.dir.string()}).code == kOk);
    const std::string cohort40 = tmp / "cohort.csv";
    REQUIRE(call({"describe", tmp / "days.csv", "--covariate-file", tmp / "covariates.csv", "--out",
                  tmp.dir.string()})
                .code == kOk);
    CHECK(call({"describe", tmp / "days.csv", "--out", tmp.dir.string()}).code == kUsage);
    const Table from_days = table_at(tmp / "describe.json");
    const auto direct = describe(load_cohort_csv(cohort40));
    for (std::size_t r = 0; r < direct.rows.size(); ++r) {
        if (direct.rows[r].value) CHECK(num(from_days.rows[r][3]) == doctest::Approx(*direct.rows[r].value).epsilon(1e-9));
    }
}

TEST_CASE("ism command") {
    Scratch tmp("ism");
    REQUIRE(call({"simulate", "--n", "600", "--seed", "9", "--out", tmp.dir.string()}).code == kOk);
    REQUIRE(call({"ism", tmp / "cohort.csv", "--out", tmp.dir.string()}).code == kOk);
    const Table t = table_at(tmp / "ism_table.json");
    const auto panel = t.column("panel"), from = t.column("from"), to = t.column("to"), est = t.column("estimate");
    std::map<std::string, std::map<std::pair<std::string, std::string>, double>> by;
    for (const auto& r : t.rows) by[str(r[panel])][{str(r[from]), str(r[to])}] = num(r[est]);
    CHECK(by.size() == 3);
    for (const auto& [name, cells] : by) {
        CHECK(cells.size() == 12);
        for (const auto& [key, v] : cells) {
            INFO(name << " " << key.first << "->" << key.second);
            CHECK(v == doctest::Approx(-cells.at({key.second, key.first})).epsilon(1e-10));
        }
    }

    REQUIRE(call({"ism", tmp / "cohort.csv", "--minutes", "0", "--no-subgroups", "--out", tmp.dir.string()}).code ==
            kOk);
    const Table zero = table_at(tmp / "ism_table.json");
    CHECK(zero.rows.size() == 12);
    for (const auto& r : zero.rows) {
        CHECK(num(r[zero.column("estimate")]) == 0.0);
        CHECK(num(r[zero.column("se")]) == 0.0);
    }

    REQUIRE(call({"ism", tmp / "cohort.csv", "--flexible", "--no-subgroups", "--covariates", "none", "--out",
                  tmp.dir.string()})
                .code == kOk);
    const Table flex = table_at(tmp / "ism_flexible.json");
    std::vector<std::string> behaviors;
    for (const auto& r : flex.rows) {
        behaviors.push_back(str(r[flex.column("behavior")]));
        const double p = num(r[flex.column("p_value")]);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    CHECK(behaviors == std::vector<std::string>{"sit", "stand", "sleep"});
}

TEST_CASE("coda command") {
    Scratch tmp("coda");
    REQUIRE(call({"simulate", "--n", "500", "--seed", "4", "--out", tmp.dir.string()}).code == kOk);
    REQUIRE(call({"coda", tmp / "cohort.csv", "--delta-grid", "-30:30:10", "--out", tmp.dir.string()}).code == kOk);
    const Table piv = table_at(tmp / "coda_pivots.json");
    REQUIRE(piv.rows.size() == 4);
    std::vector<std::string> pivots;
    for (const auto& r : piv.rows) pivots.push_back(str(r[0]));
    CHECK(pivots == std::vector<std::string>{"sit", "stand", "step", "sleep"});

    const Table curves = table_at(tmp / "coda_curves.json");
    std::size_t zeros = 0;
    for (const auto& r : curves.rows) {
        if (num(r[curves.column("delta")]) == 0.0) {
            ++zeros;
            CHECK(num(r[curves.column("estimate")]) == 0.0);
            CHECK(num(r[curves.column("ci_low")]) == 0.0);
            CHECK(num(r[curves.column("ci_high")]) == 0.0);
        }
    }
    CHECK(zeros == 4);

    const ptree svg = parse_svg(slurp(tmp / "coda_curves.svg"));
    std::vector<const ptree*> groups, polys;
    collect(svg, "g", groups);
    collect(svg, "polygon", polys);
    const auto series = std::count_if(groups.begin(), groups.end(), [](const ptree* g) { return attr(*g, "class") == "series"; });
    const auto bands = std::count_if(polys.begin(), polys.end(), [](const ptree* p) { return attr(*p, "class") == "ci-band"; });
    CHECK(series == 4);
    CHECK(bands == 4);

    REQUIRE(call({"coda", tmp / "cohort.csv", "--pivot", "step", "--pairwise", "--delta-grid", "-20:20:10", "--out",
                  tmp.dir.string()})
                .code == kOk);
    const Table pw = table_at(tmp / "coda_curves.json");
    std::set<std::string> sources;
    for (const auto& r : pw.rows) {
        CHECK(str(r[pw.column("behavior")]) == "step");
        sources.insert(str(r[pw.column("from")]));
        if (num(r[pw.column("delta")]) == 0.0) CHECK(num(r[pw.column("estimate")]) == 0.0);
    }
    CHECK(sources == std::set<std::string>{"sit", "stand", "sleep"});
}

TEST_CASE("lpa, step3 and plots on a separated cohort") {
    Scratch tmp("lpa");
    write_spec(tmp / "three.spec", separated_spec());
    REQUIRE(call({"simulate", tmp / "three.spec", "--n", "900", "--seed", "5", "--out", tmp.dir.string()}).code == kOk);
    const std::vector<std::string> lpa{"lpa", tmp / "cohort.csv", "--classes", "1:4", "--starts", "10", "--seed",
                                       "7", "--out", tmp.dir.string()};
    REQUIRE(call(lpa).code == kOk);
    const Table sel = table_at(tmp / "lpa_selection.json");
    for (const char* col : {"structure", "k", "log_likelihood", "parameters", "aic", "bic", "caic", "sabic", "icl_bic",
                            "entropy"}) {
        INFO(col);
        CHECK_NOTHROW(sel.column(col));
    }
    double best = 1e300;
    long long best_k = 0;
    for (const auto& r : sel.rows) {
        if (std::holds_alternative<std::monostate>(r[sel.column("bic")])) continue;
        const double b = num(r[sel.column("bic")]);
        if (b < best) {
            best = b;
            best_k = static_cast<long long>(num(r[sel.column("k")]));
        }
    }
    CHECK(best_k == 3);

    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(tmp.dir)) first[e.path().filename().string()] = slurp(e.path().string());
    REQUIRE(call(lpa).code == kOk);
    for (const auto& [name, text] : first) {
        INFO(name);
        CHECK(slurp(tmp / name) == text);
    }

    const Table prof = table_at(tmp / "lpa_profiles.json");
    std::vector<double> sit_means;
    for (const auto& r : prof.rows) {
        if (str(r[prof.column("indicator")]) == "sit") sit_means.push_back(num(r[prof.column("mean")]));
    }
    REQUIRE(sit_means.size() == 3);
    CHECK(std::is_sorted(sit_means.begin(), sit_means.end()));

    REQUIRE(call({"step3", tmp / "model.json", tmp / "cohort.csv", "--out", tmp.dir.string()}).code == kOk);
    const Table s3 = table_at(tmp / "step3.json");
    for (const char* col : {"naive_estimate", "naive_se", "bch_estimate", "bch_se"}) CHECK_NOTHROW(s3.column(col));
    CHECK(s3.rows.size() == 3);
    REQUIRE(call({"step3", tmp / "model.json", tmp / "cohort.csv", "--method", "ml", "--covariates", "sex,age",
                  "--out", tmp.dir.string()})
                .code == kOk);
    CHECK(fs::exists(tmp / "step3_ml.json"));
    CHECK(call({"step3", tmp / "model.json", tmp / "cohort.csv", "--reference", "9", "--out", tmp.dir.string()}).code ==
          kUsage);

    REQUIRE(call({"plot", tmp / "cohort.csv", "--kind", "profiles", "--model", tmp / "model.json", "--out",
                  tmp.dir.string()})
                .code == kOk);
    const ptree box = parse_svg(slurp(tmp / "profiles.svg"));
    std::vector<const ptree*> gs;
    collect(box, "g", gs);
    std::vector<std::string> panels, order;
    for (const auto* g : gs) {
        if (attr(*g, "class") == "panel") panels.push_back(attr(*g, "data-indicator"));
        if (attr(*g, "class") == "box" && order.size() < 3) order.push_back(attr(*g, "data-group"));
    }
    CHECK(panels == std::vector<std::string>{"sit", "stand", "step", "sleep"});
    CHECK(order == std::vector<std::string>{"Profile 1", "Profile 2", "Profile 3"});

    REQUIRE(call({"plot", tmp / "cohort.csv", "--kind", "ternary", "--parts", "sit,step,sleep", "--out",
                  tmp.dir.string()})
                .code == kOk);
    const ptree tern = parse_svg(slurp(tmp / "ternary.svg"));
    std::vector<const ptree*> texts;
    collect(tern, "text", texts);
    std::vector<std::string> vertices;
    for (const auto* n : texts) {
        if (attr(*n, "class") == "vertex") vertices.push_back(n->get_value<std::string>());
    }
    CHECK(vertices == std::vector<std::string>{"sit", "step", "sleep"});
    CHECK(call({"plot", tmp / "cohort.csv", "--kind", "profiles", "--out", tmp.dir.string()}).code == kUsage);
}
