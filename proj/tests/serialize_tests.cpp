#include <doctest.h>

#include <cstdio>
#include <string>

#include "rost/errors.hpp"
#include "rost/serialize.hpp"

using namespace rost;

namespace {

LevelStructure hand_structure() {
  LevelStructure s;
  s.q_levels = {0.1, 0.4, 0.7};
  s.atoms = {0.4, 0.3, 0.2, 0.1};
  s.residual_mass = 0.0;
  s.groups = {{0, 0, 1, 1}, {0, 1, 2, 2}};
  return s;
}

}  // namespace

TEST_CASE("mass partition round trip is canonical") {
  MassPartition p;
  p.atoms = {0.5, 0.25, 0.125};
  p.residual_mass = 0.125;
  std::string text = mass_partition_to_json(p);
  CHECK(mass_partition_to_json(p) == text);  // stable bytes
  MassPartition back = mass_partition_from_json(text);
  CHECK(back.atoms == p.atoms);
  CHECK(back.residual_mass == doctest::Approx(p.residual_mass));
  CHECK(mass_partition_to_json(back) == text);

  CHECK_THROWS_AS(mass_partition_from_json("{}"), ValidationError);
  CHECK_THROWS_AS(mass_partition_from_json("not json"), ValidationError);
}

TEST_CASE("overlap structure round trip") {
  Rost r = hand_structure().to_rost(3);
  std::string text = rost_to_json(r);
  Rost back = rost_from_json(text);
  CHECK(back.masses.atoms == r.masses.atoms);
  CHECK(back.masses.residual_mass ==
        doctest::Approx(r.masses.residual_mass));
  REQUIRE(back.overlaps.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(back.overlaps(i, j) == doctest::Approx(r.overlaps(i, j)));
  CHECK(rost_to_json(back) == text);
}

TEST_CASE("level structure round trip keeps groups") {
  LevelStructure s = hand_structure();
  std::string text = structure_to_json(s);
  LevelStructure back = structure_from_json(text);
  CHECK_NOTHROW(back.validate());
  CHECK(back.q_levels == s.q_levels);
  CHECK(back.atoms == s.atoms);
  CHECK(back.groups == s.groups);
  CHECK(back.residual_mass == doctest::Approx(s.residual_mass));
  CHECK(structure_to_json(back) == text);

  // Mismatched kinds are rejected.
  CHECK_THROWS_AS(structure_from_json(mass_partition_to_json(s.to_rost(2).masses)),
                  ValidationError);
}

TEST_CASE("atomic write then read") {
  std::string path = "serialize_test_tmp.json";
  write_file_atomic(path, "{\"a\":1}\n");
  CHECK(read_file(path) == "{\"a\":1}\n");
  write_file_atomic(path, "{\"a\":2}\n");  // overwrite goes through rename
  CHECK(read_file(path) == "{\"a\":2}\n");
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_file(path), ValidationError);
}

TEST_CASE("stable content hash") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("ab") != fnv1a64("ba"));
}
