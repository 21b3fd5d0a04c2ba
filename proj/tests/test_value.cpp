#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pico/value.hpp"

using namespace pico;
using picotest::Rng;

TEST_CASE("type_of on the basic shapes") {
  CHECK(type_of(Value::str("a")) == DataType::strt());
  CHECK(type_of(Value::tuple({Value::str("a"), Value::integer(1)})) ==
        DataType::tuple({DataType::strt(), DataType::intt()}));
  CHECK(type_of(Value::integer(3)) == DataType::intt());
  CHECK(type_of(Value::real(1.5)) == DataType::floatt());
  CHECK(type_of(Value::boolean(true)) == DataType::boolt());
  CHECK(type_of(Value::unit()) == DataType::unitt());
}

TEST_CASE("heterogeneous lists are malformed") {
  CHECK_THROWS_AS(type_of(Value::list({Value::integer(1), Value::str("a")})),
                  MalformedValue);
}

TEST_CASE("empty list types as list of bottom and unifies with anything") {
  DataType empty = type_of(Value::list({}));
  REQUIRE(empty.kind() == TypeKind::List);
  CHECK(empty.element().is_bottom());

  auto u = unify(empty, DataType::list(DataType::floatt()));
  REQUIRE(u.has_value());
  CHECK(*u == DataType::list(DataType::floatt()));

  CHECK_FALSE(unify(DataType::list(DataType::intt()), DataType::list(DataType::strt()))
                  .has_value());
  CHECK_FALSE(unify(DataType::intt(), DataType::strt()).has_value());
}

TEST_CASE("tuples require arity >= 2") {
  CHECK_THROWS_AS(Value::tuple({Value::integer(1)}), MalformedValue);
}

TEST_CASE("type_of is stable across calls") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Value v = picotest::random_value(rng);
    CHECK(type_of(v) == type_of(v));
  }
}

TEST_CASE("structural equality is an equivalence relation") {
  Rng rng(12);
  std::vector<Value> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(picotest::random_value(rng));
  for (const Value& a : pool) {
    CHECK(a == a);  // reflexive
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (pool[i] == pool[j]) CHECK(pool[j] == pool[i]);  // symmetric
    }
  }
  // transitive, via canonical literals: a==b iff literals equal for this
  // value universe, so chains cannot break
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      CHECK((pool[i] == pool[j]) == (to_literal(pool[i]) == to_literal(pool[j])));
}

TEST_CASE("literal syntax round-trips") {
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    Value v = picotest::random_value(rng);
    Value back = parse_literal(to_literal(v));
    CHECK(back == v);
  }
}

TEST_CASE("literal parsing matches the documented forms") {
  CHECK(parse_literal("1") == Value::integer(1));
  CHECK(parse_literal("-42") == Value::integer(-42));
  CHECK(parse_literal("1.5") == Value::real(1.5));
  CHECK(parse_literal("\"str\"") == Value::str("str"));
  CHECK(parse_literal("true") == Value::boolean(true));
  CHECK(parse_literal("(1, 2)") == Value::tuple({Value::integer(1), Value::integer(2)}));
  CHECK(parse_literal("[1, 2]") == Value::list({Value::integer(1), Value::integer(2)}));
  CHECK(parse_literal("[]") == Value::list({}));
  CHECK(parse_literal("unit") == Value::unit());
  CHECK(parse_literal("(\"a b\", (1, [2.5]))") ==
        Value::tuple({Value::str("a b"),
                      Value::tuple({Value::integer(1), Value::list({Value::real(2.5)})})}));
  CHECK_THROWS_AS(parse_literal("(1)"), SyntaxError);  // bare paren is not a tuple...
  CHECK_THROWS_AS(parse_literal("nope"), SyntaxError);
  CHECK_THROWS_AS(parse_literal("(1, 2) junk"), SyntaxError);
}
