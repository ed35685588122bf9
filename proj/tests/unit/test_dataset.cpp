#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "medpost/dataset.hpp"
#include "medpost/errors.hpp"
#include "test_support.hpp"

using namespace medpost;

TEST_CASE("load_csv reads the diabetes data") {
    const Dataset ds = load_csv(testing::data_dir() / "diabetes.csv", "y");
    CHECK(ds.n() == 442);
    CHECK(ds.d() == 10);
    CHECK(ds.column_names().front() == "age");
}

TEST_CASE("load_csv edge cases") {
    const auto dir = testing::scratch("load_csv");
    testing::write_text(dir / "one.csv", "x,y\n1.5,2\n");
    const Dataset one = load_csv(dir / "one.csv", "y");
    CHECK(one.n() == 1);
    CHECK(one.d() == 1);
    CHECK(one.x()(0, 0) == 1.5);

    testing::write_text(dir / "comment.csv", "# manifest_hash=abc\nx,y\n1,2\n3,4\n");
    CHECK(load_csv(dir / "comment.csv", "y").n() == 2);

    testing::write_text(dir / "bad.csv", "a,b,y\n1,2,3\n4,oops,6\n");
    try {
        load_csv(dir / "bad.csv", "y");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
    }
    CHECK_THROWS_AS(load_csv(dir / "missing.csv", "y"), DataError);
    CHECK_THROWS_AS(load_csv(dir / "one.csv", "target"), DataError);
    testing::write_text(dir / "empty.csv", "x,y\n");
    CHECK_THROWS_AS(load_csv(dir / "empty.csv", "y"), DataError);
    testing::write_text(dir / "nan.csv", "x,y\nnan,1\n");
    CHECK_THROWS_AS(load_csv(dir / "nan.csv", "y"), DataError);
}

TEST_CASE("write_csv round trips exactly") {
    const auto dir = testing::scratch("write_csv");
    SyntheticSpec spec;
    spec.n = 20;
    spec.d = 3;
    spec.n_true = 2;
    spec.seed = 5;
    const auto syn = generate_synthetic(spec);
    write_csv(dir / "d.csv", syn.data);
    const Dataset back = load_csv(dir / "d.csv", "y");
    CHECK(back.x() == syn.data.x());
    CHECK(back.y() == syn.data.y());
}

TEST_CASE("standardize") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 10, 2, 20, 3, 33;
    const Dataset ds(x, Eigen::Vector3d(1, 2, 3));
    const Dataset s = standardize(ds);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(s.x()(0, 0) == doctest::Approx(-r).epsilon(1e-14));
    CHECK(std::abs(s.x()(1, 0)) < 1e-15);
    CHECK(s.x()(2, 0) == doctest::Approx(r).epsilon(1e-14));
    for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(std::abs(s.x().col(j).mean()) < 1e-15);
        CHECK(s.x().col(j).norm() == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(s.y() == ds.y());
    const Dataset again = standardize(s);
    CHECK((again.x() - s.x()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd c(3, 1);
    c << 5, 5, 5;
    CHECK_THROWS_AS(standardize(Dataset(c, Eigen::Vector3d(1, 2, 3))), DataError);
}

TEST_CASE("generate_synthetic") {
    SyntheticSpec spec;
    spec.n = 5000;
    spec.d = 10;
    spec.n_true = 3;
    spec.seed = 7;
    const auto a = generate_synthetic(spec);
    CHECK(a.data.n() == 5000);
    CHECK(a.data.d() == 10);
    CHECK(a.beta_true.head(3) == Eigen::Vector3d(3, 1.5, 2));
    CHECK(a.beta_true.tail(7).isZero());
    const auto b = generate_synthetic(spec);
    CHECK(a.data.x() == b.data.x());
    CHECK(a.data.y() == b.data.y());

    SyntheticSpec noiseless;
    noiseless.n = 50;
    noiseless.d = 4;
    noiseless.n_true = 1;
    noiseless.noise_sd = 0.0;
    noiseless.beta_true = Eigen::Vector4d(1, 0, 0, 0);
    const auto c = generate_synthetic(noiseless);
    CHECK(c.data.y() == c.data.x().col(0));

    SyntheticSpec bad = spec;
    bad.n_true = 11;
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
}

TEST_CASE("partition") {
    const Partition one = partition(10, 1, 3);
    CHECK(one.sizes == std::vector<std::size_t>{10});
    std::vector<std::size_t> all(10);
    std::iota(all.begin(), all.end(), 0);
    CHECK(one.members[0] == all);

    const Partition three = partition(10, 3, 3);
    std::multiset<std::size_t> sizes(three.sizes.begin(), three.sizes.end());
    CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});

    const Partition big = partition(1'000'000, 50, 11);
    for (const auto s : big.sizes) CHECK(s == 20'000);

    // Bijection: every row lands in exactly one subset slot.
    const Partition p = partition(103, 7, 1);
    std::vector<int> hits(103, 0);
    for (std::size_t j = 0; j < p.r; ++j)
        for (const auto row : p.members[j]) {
            ++hits[row];
            CHECK(p.assignments[row] == j);
        }
    for (const int h : hits) CHECK(h == 1);
    CHECK(*std::max_element(p.sizes.begin(), p.sizes.end()) - *std::min_element(p.sizes.begin(), p.sizes.end()) <= 1);

    CHECK_THROWS_AS(partition(5, 6, 0), ConfigError);
    CHECK_THROWS_AS(partition(5, 0, 0), ConfigError);
    CHECK(partition(500, 9, 4).assignments == partition(500, 9, 4).assignments);
}

TEST_CASE("inject_outliers") {
    const Dataset ds(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, -3, 2));
    OutlierPlan plan;
    plan.count = 1;
    plan.magnitude = 10000;
    plan.target_indices = std::vector<std::size_t>{0};
    const Dataset out = inject_outliers(ds, plan, 0);
    CHECK(out.y() == Eigen::Vector3d(-10003, -3, 2));
    CHECK(out.x() == ds.x());

    plan.count = 0;
    plan.target_indices.reset();
    CHECK(inject_outliers(ds, plan, 0).y() == ds.y());

    plan.count = 1;
    plan.magnitude = 0;
    plan.target_indices = std::vector<std::size_t>{2};
    CHECK(inject_outliers(ds, plan, 0).y()(2) == -3);

    plan.count = 2;
    plan.target_indices = std::vector<std::size_t>{1, 1};
    CHECK_THROWS_AS(inject_outliers(ds, plan, 0), ConfigError);
    plan.count = 4;
    plan.target_indices.reset();
    CHECK_THROWS_AS(inject_outliers(ds, plan, 0), ConfigError);

    SyntheticSpec spec;
    spec.n = 200;
    spec.seed = 2;
    const auto syn = generate_synthetic(spec);
    OutlierPlan random_rows;
    random_rows.count = 5;
    const Dataset c = inject_outliers(syn.data, random_rows, 9);
    CHECK((c.y().array() != syn.data.y().array()).count() == 5);
    CHECK(c.x() == syn.data.x());
    const double v = outlier_value(syn.data.y(), 1e4);
    CHECK((c.y().array() == v).count() == 5);
}

TEST_CASE("split_holdout and rows_in_subsets") {
    SyntheticSpec spec;
    spec.n = 100;
    spec.seed = 1;
    const auto syn = generate_synthetic(spec);
    const HoldoutSplit split = split_holdout(syn.data, 10, 4);
    CHECK(split.test.n() == 10);
    CHECK(split.train.n() == 90);
    CHECK(std::is_sorted(split.test_indices.begin(), split.test_indices.end()));
    for (std::size_t i = 0; i < split.test_indices.size(); ++i)
        CHECK(split.test.y()(static_cast<Eigen::Index>(i)) == syn.data.y()(static_cast<Eigen::Index>(split.test_indices[i])));

    const Partition p = partition(90, 5, 2);
    const std::size_t sub[] = {3};
    const auto rows = rows_in_subsets(p, sub, 4);
    CHECK(rows.size() == 4);
    for (const auto r : rows) CHECK(p.assignments[r] == 3);
}
