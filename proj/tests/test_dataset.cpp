#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "elmeta/dataset.hpp"
#include "support/synthetic.hpp"

using namespace elmeta;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "elmeta_dataset_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
    auto path = temp_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

} // namespace

TEST_CASE("loads a simple CSV with the last column as target") {
    auto path = write_file("tiny.csv", "x,y\n1,2\n2,4\n3,6\n");
    auto lr = load_csv(path);
    REQUIRE(lr.dataset.rows() == 3);
    REQUIRE(lr.dataset.features.size() == 1);
    REQUIRE(lr.dataset.features[0].kind == ColumnKind::continuous);
    REQUIRE(lr.dataset.features[0].numeric == std::vector<double>{1, 2, 3});
    REQUIRE(lr.dataset.target.numeric == std::vector<double>{2, 4, 6});
    REQUIRE(lr.dataset.name == "tiny");
}

TEST_CASE("a column with any non-numeric cell is symbolic") {
    auto path = write_file("mixed.csv", "a,y\n1,0\n2,1\nabc,2\n");
    auto lr = load_csv(path);
    REQUIRE(lr.dataset.features[0].kind == ColumnKind::symbolic);
    REQUIRE(lr.dataset.features[0].categories.size() == 3);
}

TEST_CASE("CSV requires a numeric target") {
    auto path = write_file("badtarget.csv", "a,y\n1,x\n2,y\n");
    REQUIRE_THROWS(load_csv(path));
}

TEST_CASE("CSV rejects malformed rows") {
    auto path = write_file("ragged.csv", "a,b,y\n1,2,3\n4,5\n");
    REQUIRE_THROWS(load_csv(path));
}

TEST_CASE("CSV quoted cells with commas and escaped quotes") {
    auto path = write_file("quoted.csv", "name,y\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n");
    auto lr = load_csv(path);
    REQUIRE(lr.dataset.features[0].kind == ColumnKind::symbolic);
    REQUIRE(lr.dataset.features[0].categories[0] == "a,b");
    REQUIRE(lr.dataset.features[0].categories[1] == "say \"hi\"");
}

TEST_CASE("empty CSV cells reject the row with a counted warning") {
    auto path = write_file("missing.csv", "a,y\n1,2\n,3\n4,5\n");
    auto lr = load_csv(path);
    REQUIRE(lr.dataset.rows() == 2);
    REQUIRE(lr.rows_rejected == 1);
    REQUIRE_FALSE(lr.warnings.empty());
}

TEST_CASE("ARFF nominal attribute round-trips its declared categories") {
    auto path = write_file("colors.arff",
                           "% comment line\n"
                           "@relation colors\n"
                           "@attribute color {red,green}\n"
                           "@attribute y numeric\n"
                           "@data\n"
                           "red,1\n"
                           "green,2\n"
                           "red,3\n");
    auto lr = load_arff(path);
    REQUIRE(lr.dataset.features.size() == 1);
    const auto& col = lr.dataset.features[0];
    REQUIRE(col.kind == ColumnKind::symbolic);
    REQUIRE(col.categories == std::vector<std::string>{"red", "green"});
    REQUIRE(col.codes == std::vector<std::int32_t>{0, 1, 0});
    REQUIRE(lr.dataset.target.numeric == std::vector<double>{1, 2, 3});
}

TEST_CASE("ARFF '?' cells reject the row with a counted warning") {
    auto path = write_file("gaps.arff",
                           "@relation gaps\n"
                           "@attribute a numeric\n"
                           "@attribute y numeric\n"
                           "@data\n"
                           "1,2\n"
                           "?,3\n"
                           "4,5\n");
    auto lr = load_arff(path);
    REQUIRE(lr.dataset.rows() == 2);
    REQUIRE(lr.rows_rejected == 1);
}

TEST_CASE("ARFF rejects unsupported constructs") {
    auto strings = write_file("strings.arff",
                              "@relation s\n@attribute a string\n@attribute y numeric\n@data\nx,1\n");
    REQUIRE_THROWS(load_arff(strings));
    auto sparse = write_file("sparse.arff",
                             "@relation s\n@attribute a numeric\n@attribute y numeric\n@data\n{0 1}\n");
    REQUIRE_THROWS(load_arff(sparse));
    auto keyword = write_file("keyword.arff", "@foo bar\n@data\n");
    REQUIRE_THROWS(load_arff(keyword));
}

TEST_CASE("admission thresholds") {
    std::mt19937_64 rng(5);
    auto make = [&](std::size_t rows, std::size_t distinct) {
        std::vector<double> x(rows), y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            x[i] = static_cast<double>(i);
            y[i] = static_cast<double>(i % distinct);
        }
        return synthetic::from_columns("adm", {{"x", x}}, y);
    };

    SECTION("99 rows fail the row threshold") {
        auto r = check_admission(make(99, 50));
        REQUIRE_FALSE(r.admitted);
        REQUIRE(r.row_count == 99);
        bool mentions_rows = false;
        for (const auto& reason : r.reasons)
            if (reason.find("row_count") != std::string::npos) mentions_rows = true;
        REQUIRE(mentions_rows);
    }
    SECTION("boundary case 100 rows / 10 distinct targets is admitted") {
        auto r = check_admission(make(100, 10));
        REQUIRE(r.admitted);
        REQUIRE(r.distinct_target_values == 10);
    }
    SECTION("9 distinct target values fail regardless of size") {
        auto r = check_admission(make(500, 9));
        REQUIRE_FALSE(r.admitted);
    }
}

TEST_CASE("normalization maps ranges exactly") {
    auto d = synthetic::from_columns("norm", {{"f", {2, 4, 6}}}, {10, 15, 20});
    auto n = normalize(d);
    REQUIRE(n.features[0].numeric == std::vector<double>{-1, 0, 1});
    REQUIRE(n.target.numeric[0] == 0.0);
    REQUIRE(n.target.numeric[2] == 1.0);
    REQUIRE(n.normalized);
    REQUIRE(n.norm_params.has_value());
}

TEST_CASE("two-value target normalizes to exactly {0,1}") {
    auto d = synthetic::from_columns("t2", {{"f", {1, 2}}}, {10, 20});
    auto n = normalize(d);
    REQUIRE(n.target.numeric == std::vector<double>{0, 1});
}

TEST_CASE("one-hot binarization emits k indicator bits with one 1 per row") {
    Dataset d;
    d.name = "onehot";
    d.features.push_back(Column::make_symbolic("c", {0, 1, 2, 1}, {"a", "b", "c"}));
    d.target = Column::make_continuous("y", {1, 2, 3, 4});
    auto n = normalize(d);
    REQUIRE(n.features.size() == 3);
    // row 1 holds category b -> indicator triple (0,1,0)
    REQUIRE(n.features[0].numeric[1] == 0.0);
    REQUIRE(n.features[1].numeric[1] == 1.0);
    REQUIRE(n.features[2].numeric[1] == 0.0);
    for (std::size_t r = 0; r < 4; ++r) {
        double sum = 0.0;
        for (const auto& c : n.features) {
            REQUIRE(c.indicator);
            sum += c.numeric[r];
        }
        REQUIRE(sum == 1.0);
    }
}

TEST_CASE("unobserved declared categories get no indicator column") {
    Dataset d;
    d.name = "unobserved";
    d.features.push_back(Column::make_symbolic("c", {0, 2, 0}, {"a", "b", "c"}));
    d.target = Column::make_continuous("y", {1, 2, 3});
    auto n = normalize(d);
    REQUIRE(n.features.size() == 2); // only a and c observed
    REQUIRE(n.features[0].name == "c=a");
    REQUIRE(n.features[1].name == "c=c");
}

TEST_CASE("constant feature columns normalize to zeros, constant target errors") {
    auto d = synthetic::from_columns("const", {{"f", {5, 5, 5}}}, {1, 2, 3});
    auto n = normalize(d);
    REQUIRE(n.features[0].numeric == std::vector<double>{0, 0, 0});

    auto bad = synthetic::from_columns("badt", {{"f", {1, 2, 3}}}, {7, 7, 7});
    REQUIRE_THROWS(normalize(bad));
}

TEST_CASE("normalize is idempotent in effect when forced through") {
    std::mt19937_64 rng(21);
    Dataset d;
    d.name = "idem";
    std::vector<double> f1(30), f2(30), y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        f1[i] = uniform_range(rng, -7.0, 3.0);
        f2[i] = uniform_range(rng, 100.0, 900.0);
        y[i] = uniform_range(rng, -1.0, 5.0);
    }
    d.features.push_back(Column::make_continuous("f1", f1));
    d.features.push_back(Column::make_continuous("f2", f2));
    d.features.push_back(Column::make_symbolic("c", std::vector<std::int32_t>(30, 0), {"a"}));
    d.features.back().codes[3] = 0;
    d.target = Column::make_continuous("y", y);
    // give the symbolic column two observed values
    d.features[2].categories = {"a", "b"};
    for (std::size_t i = 0; i < 30; i += 2) d.features[2].codes[i] = 1;

    auto once = normalize(d);
    auto twice = normalize(once, /*force=*/true);
    REQUIRE(once.features.size() == twice.features.size());
    for (std::size_t c = 0; c < once.features.size(); ++c)
        for (std::size_t r = 0; r < once.rows(); ++r)
            REQUIRE(twice.features[c].numeric[r] ==
                    Catch::Approx(once.features[c].numeric[r]).margin(1e-12));
    for (std::size_t r = 0; r < once.rows(); ++r)
        REQUIRE(twice.target.numeric[r] == Catch::Approx(once.target.numeric[r]).margin(1e-12));
}

TEST_CASE("renormalizing without force is rejected") {
    auto d = synthetic::from_columns("again", {{"f", {1, 2, 3}}}, {1, 2, 3});
    auto n = normalize(d);
    REQUIRE_THROWS_AS(normalize(n), ValidationError);
}

TEST_CASE("split sizes follow round(fraction * n)") {
    auto d10 = synthetic::make_linear_dataset("s10", 10, 2, 3);
    auto [tr, te] = split_train_test(d10, 0.7, 42);
    REQUIRE(tr.rows() == 7);
    REQUIRE(te.rows() == 3);

    auto d2 = synthetic::make_linear_dataset("s2", 2, 1, 3);
    auto [tr2, te2] = split_train_test(d2, 0.7, 0);
    REQUIRE(tr2.rows() == 1);
    REQUIRE(te2.rows() == 1);
}

TEST_CASE("split is deterministic and partitions the rows") {
    auto d = synthetic::make_linear_dataset("part", 37, 2, 9);
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        auto [a_train, a_test] = split_train_test(d, 0.6, seed);
        auto [b_train, b_test] = split_train_test(d, 0.6, seed);
        REQUIRE(a_train.target.numeric == b_train.target.numeric);
        REQUIRE(a_test.target.numeric == b_test.target.numeric);

        std::multiset<double> all(d.target.numeric.begin(), d.target.numeric.end());
        std::multiset<double> split_rows(a_train.target.numeric.begin(),
                                         a_train.target.numeric.end());
        split_rows.insert(a_test.target.numeric.begin(), a_test.target.numeric.end());
        REQUIRE(all == split_rows);
    }
}

TEST_CASE("degenerate split fractions are rejected") {
    auto d = synthetic::make_linear_dataset("frac", 4, 1, 1);
    REQUIRE_THROWS_AS(split_train_test(d, 0.0, 1), ValidationError);
    REQUIRE_THROWS_AS(split_train_test(d, 1.0, 1), ValidationError);
    REQUIRE_THROWS_AS(split_train_test(d, 0.05, 1), ValidationError); // rounds to 0
}

TEST_CASE("canonical save/load round-trip preserves the dataset") {
    std::mt19937_64 rng(77);
    Dataset d;
    d.name = "roundtrip";
    std::vector<double> f(25), y(25);
    std::vector<std::int32_t> codes(25);
    for (std::size_t i = 0; i < 25; ++i) {
        f[i] = uniform_range(rng, -3.0, 3.0);
        y[i] = uniform_range(rng, 0.0, 10.0);
        codes[i] = static_cast<std::int32_t>(rng() % 3);
    }
    d.features.push_back(Column::make_continuous("f", f));
    d.features.push_back(Column::make_symbolic("c", codes, {"low", "mid,comma", "high"}));
    d.target = Column::make_continuous("y", y);

    auto path = temp_dir() / "roundtrip.csv";
    save_dataset(d, path);
    auto lr = load_canonical(path);
    REQUIRE(lr.dataset.name == d.name);
    REQUIRE(lr.dataset.features.size() == d.features.size());
    REQUIRE(lr.dataset.features[0].numeric == d.features[0].numeric);
    REQUIRE(lr.dataset.features[1].codes == d.features[1].codes);
    REQUIRE(lr.dataset.features[1].categories == d.features[1].categories);
    REQUIRE(lr.dataset.target.numeric == d.target.numeric);

    // normalized datasets round-trip their parameters too
    auto n = normalize(synthetic::make_linear_dataset("normed", 20, 2, 5));
    auto npath = temp_dir() / "normed.csv";
    save_dataset(n, npath);
    auto nr = load_canonical(npath);
    REQUIRE(nr.dataset.normalized);
    REQUIRE(nr.dataset.norm_params.has_value());
    REQUIRE(nr.dataset.norm_params->target_min ==
            Catch::Approx(n.norm_params->target_min).margin(0));
    REQUIRE(nr.dataset.features[0].numeric == n.features[0].numeric);
}

TEST_CASE("apply_normalization reproduces the one-hot and affine mapping") {
    Dataset d;
    d.name = "reapply";
    d.features.push_back(Column::make_continuous("f", {0, 5, 10}));
    d.features.push_back(Column::make_symbolic("c", {0, 1, 0}, {"a", "b"}));
    d.target = Column::make_continuous("y", {0, 1, 2});
    auto n = normalize(d);
    auto row = apply_normalization(*n.norm_params, d, 1);
    REQUIRE(row.size() == 3); // f + two indicator bits
    REQUIRE(row[0] == 0.0);   // 5 is the midpoint of [0,10]
    REQUIRE(row[1] == 0.0);
    REQUIRE(row[2] == 1.0);
}
