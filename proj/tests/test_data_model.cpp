#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "extdef/csv_io.hpp"
#include "extdef/errors.hpp"
#include "extdef/observations.hpp"
#include "extdef/rng.hpp"

using namespace extdef;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("extdef_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (path / name).string();
        std::ofstream(p) << content;
        return p;
    }
};

ObservationMatrix make_obs(const Eigen::MatrixXd& values) {
    ObservationMatrix obs;
    obs.values = values;
    obs.scale = Scale::Raw;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        obs.site_ids.push_back("s" + std::to_string(j + 1));
    return obs;
}

}  // namespace

TEST_CASE("load_observations reads back a small file in site order") {
    TempDir tmp;
    const auto sites = tmp.file("sites.csv", "id,x,y\nA,0,0\nB,1,0\n");
    const auto obs_path = tmp.file("obs.csv", "A,B\n1,2\n3,4\n5,6\n");
    const auto [obs, site_set] = load_observations(obs_path, sites);
    CHECK(obs.n() == 3);
    CHECK(obs.d() == 2);
    CHECK(obs.scale == Scale::Raw);
    CHECK(obs.values(0, 0) == 1.0);
    CHECK(obs.values(2, 1) == 6.0);
    CHECK(site_set[1].id == "B");

    // Columns returned in site-file order even if the header is permuted.
    const auto obs2_path = tmp.file("obs2.csv", "B,A\n2,1\n4,3\n6,5\n");
    const auto [obs2, s2] = load_observations(obs2_path, sites);
    CHECK(obs2.values(0, 0) == 1.0);
    CHECK(obs2.values(0, 1) == 2.0);
}

TEST_CASE("load_observations dimension mismatch and parse errors") {
    TempDir tmp;
    const auto sites3 = tmp.file("sites3.csv", "id,x,y\nA,0,0\nB,1,0\nC,0,1\n");
    const auto obs_path = tmp.file("obs.csv", "A,B\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_observations(obs_path, sites3), config_error);

    const auto sites2 = tmp.file("sites2.csv", "id,x,y\nA,0,0\nB,1,0\n");
    const auto bad = tmp.file("bad.csv", "A,B\n1,2\n3,nan\n");
    CHECK_THROWS_WITH_AS(load_observations(bad, sites2),
                         doctest::Contains("row 3"), config_error);
    const auto bad2 = tmp.file("bad2.csv", "A,B\n1,2\n3,hello\n");
    CHECK_THROWS_AS(load_observations(bad2, sites2), config_error);
}

TEST_CASE("rank_transform maps ranks to the stated scales") {
    Eigen::MatrixXd v(3, 3);
    v << 3.0, 1.0, 2.0,
         1.0, 2.0, 3.0,
         2.0, 3.0, 1.0;
    const auto uni = rank_transform(make_obs(v), Scale::Uniform);
    CHECK(uni.values(0, 0) == doctest::Approx(0.75));
    CHECK(uni.values(1, 0) == doctest::Approx(0.25));
    CHECK(uni.values(2, 0) == doctest::Approx(0.50));

    // u = 0.5 maps to -log(0.5) on the exponential scale and -1/log(0.5)
    // on the Frechet scale.
    const auto expo = rank_transform(make_obs(v), Scale::Exponential);
    CHECK(expo.values(2, 0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    const auto fre = rank_transform(make_obs(v), Scale::Frechet);
    CHECK(fre.values(2, 0) == doctest::Approx(1.4426950408889634).epsilon(1e-12));
}

TEST_CASE("rank_transform rejects constant columns and wrong scales") {
    Eigen::MatrixXd v(3, 2);
    v << 1.0, 1.0, 2.0, 1.0, 3.0, 1.0;
    CHECK_THROWS_WITH_AS(rank_transform(make_obs(v), Scale::Uniform),
                         doctest::Contains("constant"), config_error);

    Eigen::MatrixXd w(3, 2);
    w << 1.0, 2.0, 2.0, 3.0, 3.0, 1.0;
    auto obs = make_obs(w);
    obs.scale = Scale::Frechet;
    CHECK_THROWS_AS(rank_transform(obs, Scale::Uniform), config_error);
}

TEST_CASE("rank_transform ties get average ranks") {
    Eigen::MatrixXd v(4, 2);
    v << 1.0, 5.0, 2.0, 6.0, 2.0, 7.0, 3.0, 8.0;
    const auto uni = rank_transform(make_obs(v), Scale::Uniform);
    CHECK(uni.values(1, 0) == doctest::Approx(2.5 / 5.0));
    CHECK(uni.values(2, 0) == doctest::Approx(2.5 / 5.0));
}

TEST_CASE("rank_transform properties: monotone, composable, row-permutation equivariant") {
    Rng rng(42);
    const Eigen::Index n = 60, d = 4;
    Eigen::MatrixXd v(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v(i, j) = rng.normal() * (1.0 + static_cast<double>(j));
    const auto obs = make_obs(v);

    for (const Scale target : {Scale::Uniform, Scale::Exponential, Scale::Frechet, Scale::Gaussian}) {
        const auto t = rank_transform(obs, target);
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = a + 1; b < n; ++b)
                    if (v(a, j) < v(b, j)) CHECK(t.values(a, j) < t.values(b, j));
    }

    // raw -> uniform -> exponential, then the analytic exponential CDF
    // recovers the uniform values.
    const auto uni = rank_transform(obs, Scale::Uniform);
    const auto expo = rank_transform(uni, Scale::Exponential);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            CHECK(1.0 - std::exp(-expo.values(i, j)) ==
                  doctest::Approx(uni.values(i, j)).epsilon(1e-12));

    // Permuting rows permutes the transform.
    Eigen::MatrixXd vperm = v;
    vperm.row(0).swap(vperm.row(n - 1));
    const auto tp = rank_transform(make_obs(vperm), Scale::Gaussian);
    const auto t0 = rank_transform(obs, Scale::Gaussian);
    CHECK(tp.values(0, 0) == doctest::Approx(t0.values(n - 1, 0)));
    CHECK(tp.values(n - 1, 2) == doctest::Approx(t0.values(0, 2)));
}

TEST_CASE("observation matrix scale invariants are enforced") {
    Eigen::MatrixXd v(2, 2);
    v << 0.5, 1.5, 0.25, 0.75;
    auto obs = make_obs(v);
    obs.scale = Scale::Uniform;
    CHECK_THROWS_AS(obs.validate(), config_error);  // 1.5 outside (0,1)
    obs.scale = Scale::Raw;
    CHECK_NOTHROW(obs.validate());
}
