#include "doctest.h"
#include "orchardsynth/bvh.hpp"
#include "orchardsynth/error.hpp"
#include "orchardsynth/geometry.hpp"
#include "orchardsynth/scene.hpp"
#include "support.hpp"

using namespace orchard;
using testing::random_ray;
using testing::random_triangles;

namespace {

Primitive tri(Vec3 a, Vec3 b, Vec3 c, ClassId cls = ClassId::bark) {
  Primitive p;
  p.vertices = {a, b, c};
  p.class_id = cls;
  return p;
}

Scene bark_scene(std::vector<Primitive> prims) {
  return Scene(std::move(prims), {testing::gray_material(0.5)});
}

}  // namespace

TEST_CASE("ray_triangle axis-aligned hit, parallel miss, translation") {
  const Primitive t0 = tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0});
  const auto hit = ray_triangle(Ray{{0, 0, 1}, {0, 0, -1}}, t0);
  REQUIRE(hit);
  CHECK(hit->t == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hit->u >= 0);
  CHECK(hit->v >= 0);
  CHECK(hit->u + hit->v <= 1);

  CHECK_FALSE(ray_triangle(Ray{{0, 0, 1}, {1, 0, 0}}, t0));

  const Primitive t1 = tri({-1, -1, 0.25}, {1, -1, 0.25}, {0, 1, 0.25});
  const auto hit1 = ray_triangle(Ray{{0, 0, 1}, {0, 0, -1}}, t1);
  REQUIRE(hit1);
  CHECK(hit1->t == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("ray_triangle respects the open interval (t_min, t_max)") {
  const Primitive t0 = tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0});
  Ray r{{0, 0, 1}, {0, 0, -1}};
  r.t_max = 1.0;
  CHECK_FALSE(ray_triangle(r, t0));
  r.t_max = 1.5;
  r.t_min = 1.0;
  CHECK_FALSE(ray_triangle(r, t0));
  r.t_min = 0.5;
  CHECK(ray_triangle(r, t0));
  // Behind the origin.
  CHECK_FALSE(ray_triangle(Ray{{0, 0, -1}, {0, 0, -1}}, t0));
}

TEST_CASE("barycentrics reconstruct the hit point") {
  std::mt19937_64 g(7);
  auto prims = random_triangles(g, 200, 1.0, 0.8);
  int hits = 0;
  for (const auto &p : prims) {
    for (int k = 0; k < 20; ++k) {
      const Ray r = random_ray(g, 2.0);
      const auto h = ray_triangle(r, p);
      if (!h) continue;
      ++hits;
      const Vec3 q = p.vertices[0] * (1 - h->u - h->v) + p.vertices[1] * h->u + p.vertices[2] * h->v;
      CHECK(length(q - r.at(h->t)) < 1e-9);
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("library kernel agrees with an independent Moller-Trumbore oracle") {
  std::mt19937_64 g(11);
  auto prims = random_triangles(g, 300, 1.0, 0.6);
  int agree = 0;
  for (const auto &p : prims) {
    for (int k = 0; k < 100; ++k) {
      const Ray r = random_ray(g, 1.5);
      const auto a = ray_triangle(r, p);
      const auto b = testing::moller_trumbore(r, p);
      // Disagreement is only tolerated for grazing hits on an edge.
      if (a.has_value() != b.has_value()) {
        REQUIRE(a.has_value());
        const double w = 1 - a->u - a->v;
        CHECK(std::min({a->u, a->v, w}) < 1e-9);
        continue;
      }
      if (a) {
        CHECK(a->t == doctest::Approx(*b).epsilon(1e-9));
        ++agree;
      }
    }
  }
  CHECK(agree > 100);
}

TEST_CASE("watertight: rays through a shared edge hit at least one neighbor") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int trials = 0;
  for (int s = 0; s < 2000; ++s) {
    // Quad split along the diagonal a-c; aim exactly at points on a-c.
    const Vec3 a = testing::random_point(g, -1, 1), c = testing::random_point(g, -1, 1);
    const Vec3 b = testing::random_point(g, -1, 1);
    const Vec3 d = a + c - b;
    const Primitive t0 = tri(a, b, c), t1 = tri(a, c, d);
    if (t0.area() < 1e-3 || t1.area() < 1e-3) continue;
    const double lambda = u01(g);
    const Vec3 target = a * (1 - lambda) + c * lambda;
    const Vec3 origin = target + testing::random_point(g, -3, 3);
    const Ray r{origin, normalize(target - origin)};
    ++trials;
    CHECK((ray_triangle(r, t0).has_value() || ray_triangle(r, t1).has_value()));
  }
  CHECK(trials > 1000);
}

TEST_CASE("watertight: rays through a shared vertex of a fan hit at least one triangle") {
  // Closed fan around the origin in the z = 0 plane; rays aimed at the hub.
  constexpr int n = 7;
  std::vector<Primitive> fan;
  for (int i = 0; i < n; ++i) {
    const double a0 = 2 * std::numbers::pi * i / n, a1 = 2 * std::numbers::pi * (i + 1) / n;
    fan.push_back(tri({0, 0, 0}, {std::cos(a0), std::sin(a0), 0}, {std::cos(a1), std::sin(a1), 0}));
  }
  std::mt19937_64 g(5);
  for (int k = 0; k < 500; ++k) {
    Vec3 o = testing::random_point(g, -2, 2);
    o.z = std::abs(o.z) + 0.1;
    const Ray r{o, normalize(Vec3{0, 0, 0} - o)};
    bool any = false;
    for (const auto &p : fan) any = any || ray_triangle(r, p).has_value();
    CHECK(any);
  }
}

TEST_CASE("index with one triangle answers like the direct kernel") {
  const std::vector<Primitive> one{tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0})};
  const Bvh bvh(one);
  std::mt19937_64 g(17);
  for (int k = 0; k < 500; ++k) {
    const Ray r = random_ray(g, 1.5);
    const auto direct = ray_triangle(r, one[0]);
    const auto indexed = bvh.closest(r);
    REQUIRE(direct.has_value() == indexed.has_value());
    if (direct) {
      CHECK(indexed->tri.t == direct->t);
      CHECK(indexed->primitive_index == 0);
    }
    CHECK(bvh.any(r) == direct.has_value());
  }
}

TEST_CASE("empty index returns absent for every query") {
  const Bvh bvh(std::span<const Primitive>{});
  const Scene scene;
  std::mt19937_64 g(1);
  for (int k = 0; k < 50; ++k) {
    const Ray r = random_ray(g, 1.0);
    CHECK_FALSE(bvh.closest(r));
    CHECK_FALSE(bvh.any(r));
    CHECK_FALSE(scene.intersect_closest(r));
    CHECK_FALSE(scene.intersect_any(r));
  }
}

TEST_CASE("10,000 random triangles: indexed closest hit equals linear scan") {
  std::mt19937_64 g(2024);
  const Scene scene = bark_scene(random_triangles(g, 10000, 5.0, 0.4));
  int hits = 0;
  for (int k = 0; k < 1000; ++k) {
    const Ray r = random_ray(g, 6.0);
    const auto a = scene.intersect_closest(r);
    const auto b = scene.intersect_closest_linear(r);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(*a == *b);
      ++hits;
    }
  }
  CHECK(hits > 100);
}

TEST_CASE("intersect_closest: nearer of two parallel triangles wins; miss is absent") {
  const Scene scene = bark_scene({tri({-1, -1, -1}, {1, -1, -1}, {0, 1, -1}),
                                  tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0})});
  const auto h = intersect_closest(scene, Ray{{0, 0, 1}, {0, 0, -1}});
  REQUIRE(h);
  CHECK(h->primitive_index == 1);
  CHECK(h->point.z == doctest::Approx(0.0));
  CHECK(h->t == doctest::Approx(1.0));
  CHECK_FALSE(intersect_closest(scene, Ray{{5, 5, 1}, {0, 0, -1}}));
}

TEST_CASE("500-triangle random scenes: closest hit equals linear scan (property)") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 g(seed);
    const Scene scene = bark_scene(random_triangles(g, 500, 2.0, 0.5));
    for (int k = 0; k < 200; ++k) {
      const Ray r = random_ray(g, 2.5);
      const auto a = scene.intersect_closest(r);
      const auto b = scene.intersect_closest_linear(r);
      REQUIRE(a.has_value() == b.has_value());
      if (a) CHECK(*a == *b);
    }
  }
}

TEST_CASE("coincident triangles resolve to the lowest index on both paths") {
  std::vector<Primitive> prims;
  for (int i = 0; i < 12; ++i) prims.push_back(tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0}));
  // Shuffled spatial filler so the duplicates land in different leaves.
  std::mt19937_64 g(9);
  auto extra = random_triangles(g, 300, 3.0, 0.3);
  for (auto &p : extra) p.vertices[0].z += 10;
  prims.insert(prims.begin() + 3, extra.begin(), extra.end());
  const Scene scene = bark_scene(prims);
  const Ray r{{0.1, -0.2, 1}, {0, 0, -1}};
  const auto a = scene.intersect_closest(r);
  const auto b = scene.intersect_closest_linear(r);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->primitive_index == 0);
  CHECK(*a == *b);
}

TEST_CASE("intersect_any: occluder before t_max, shortened t_max, agreement with closest") {
  const Scene scene = bark_scene({tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0})});
  Ray r{{0, 0, 1}, {0, 0, -1}};
  r.t_max = 2.0;
  CHECK(intersect_any(scene, r));
  r.t_max = 0.5;
  CHECK_FALSE(intersect_any(scene, r));

  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    std::mt19937_64 g(seed);
    const Scene s = bark_scene(random_triangles(g, 400, 2.0, 0.5));
    std::uniform_real_distribution<double> tm(0.1, 6.0);
    for (int k = 0; k < 300; ++k) {
      Ray q = random_ray(g, 2.5);
      q.t_max = tm(g);
      CHECK(s.intersect_any(q) == s.intersect_closest(q).has_value());
    }
  }
}

TEST_CASE("scene construction enforces label and material invariants") {
  auto walnut = tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0}, ClassId::walnut);
  SUBCASE("walnut needs an instance id") {
    CHECK_THROWS_AS(bark_scene({walnut}), ValidationError);
  }
  SUBCASE("non-walnut must have id 0") {
    auto leaf = tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0}, ClassId::leaf);
    leaf.instance_id = 3;
    CHECK_THROWS_AS(bark_scene({leaf}), ValidationError);
  }
  SUBCASE("ids must be contiguous from 1") {
    walnut.instance_id = 2;
    CHECK_THROWS_AS(bark_scene({walnut}), ValidationError);
    walnut.instance_id = 1;
    CHECK(bark_scene({walnut}).walnut_instance_count() == 1);
  }
  SUBCASE("material id in range") {
    auto p = tri({-1, -1, 0}, {1, -1, 0}, {0, 1, 0});
    p.material_id = 1;
    CHECK_THROWS_AS(bark_scene({p}), ValidationError);
  }
  SUBCASE("degenerate triangle") {
    CHECK_THROWS_AS(bark_scene({tri({0, 0, 0}, {1, 0, 0}, {2, 0, 0})}), ValidationError);
  }
  SUBCASE("material optics") {
    CHECK_THROWS_AS(validate_material(testing::gray_material(0.7, 0.4), 4), ValidationError);
    CHECK_THROWS_AS(validate_material(testing::gray_material(-0.1), 4), ValidationError);
    CHECK_THROWS_AS(validate_material(testing::gray_material(0.3), 3), ValidationError);
    CHECK_NOTHROW(validate_material(testing::gray_material(0.6, 0.4), 4));
  }
}
