#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "shardmap/mapper.hpp"
#include "shardmap/shardcore.hpp"

using namespace shardmap;

namespace {

ShardSpec votes_spec(int n) {
  ShardSpec spec;
  spec.property = "votes";
  spec.neutral = 0;
  spec.fold = "sum-int";
  if (n > 0) {
    spec.mode = ShardMode::static_n;
    spec.shard_count = n;
  } else {
    spec.mode = ShardMode::dynamic;
  }
  return spec;
}

MappingDef question_def(int n) {
  MappingDef def;
  def.kind = "Question";
  def.plain_properties = {"question", "author"};
  def.shard_specs = {votes_spec(n)};
  def.shard_methods = {ShardMethodDef{"voteUp", "votes", "increment"},
                       ShardMethodDef{"voteDown", "votes", "decrement"},
                       ShardMethodDef{"addVotes", "votes", "add"}};
  return def;
}

// Persists a question with `votes` split across n static shards.
Key seed_question(Store& store, std::int64_t votes, int n) {
  Entity main{Key::root("Question", "42"),
              {{"question", "How do you plan to improve public education?"},
               {"author", "Phil R"},
               {"votes", votes}}};
  auto [stripped, shards] = static_shard_init(main, votes_spec(n));
  store.put(stripped);
  for (const Entity& s : shards) store.put(s);
  store.advance_time(store.config().query_staleness_window +
                     store.config().commit_service_time);
  return main.key;
}

}  // namespace

TEST_CASE("register rejects duplicates and broken fold laws") {
  Store store;
  Mapper mapper(store);
  CHECK_NOTHROW(mapper.register_mapping(question_def(10)));
  CHECK_THROWS_AS(mapper.register_mapping(question_def(10)),
                  DuplicateKindError);

  MappingDef bad = question_def(10);
  bad.kind = "Broken";
  bad.shard_specs[0].neutral = 1;  // 1 + x != x
  CHECK_THROWS_AS(mapper.register_mapping(bad), FoldLawViolationError);
}

TEST_CASE("load folds the shards and starts with a neutral delta") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(3));
  Key key = seed_question(store, 76, 3);

  MappedObject obj = mapper.load("Question", key);
  CHECK(obj.value("votes") == 76);
  CHECK(obj.shard_delta("votes") == 0);
  CHECK(obj.plain("author") == "Phil R");

  CHECK_THROWS_AS(mapper.load("Question", Key::root("Question", "404")),
                  NotFoundError);
}

TEST_CASE("load of all-neutral shards aggregates to neutral") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(4));
  Key key = seed_question(store, 0, 4);
  CHECK(mapper.load("Question", key).value("votes") == 0);
}

TEST_CASE("load matches a brute-force sum over random shard values") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    Store store;
    Mapper mapper(store);
    int n = 1 + static_cast<int>(rng() % 16);
    mapper.register_mapping(question_def(n));
    Key key = seed_question(store, 0, n);

    std::int64_t expected = 0;
    for (const Key& k : make_shard_keys(key, n)) {
      std::int64_t v = static_cast<std::int64_t>(rng() % 1000);
      expected += v;
      Entity shard = *store.get(k);
      shard.properties["shard_votes"] = v;
      store.put(shard);
      store.advance_time(store.config().commit_service_time);
    }
    CHECK(mapper.load("Question", key).value("votes") == expected);
  }
}

TEST_CASE("shard methods update the aggregate and the delta together") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(3));
  Key key = seed_question(store, 76, 3);

  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "voteUp");
  CHECK(obj.value("votes") == 77);
  CHECK(obj.shard_delta("votes") == 1);

  mapper.apply_shard_method(obj, "voteUp");
  mapper.apply_shard_method(obj, "voteUp");
  CHECK(obj.value("votes") == 79);
  CHECK(obj.shard_delta("votes") == 3);

  CHECK_THROWS_AS(mapper.apply_shard_method(obj, "nope"), UnknownMethodError);
}

TEST_CASE("random up/down sequences keep aggregate minus initial == delta") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(5));
  Key key = seed_question(store, 76, 5);

  std::mt19937_64 rng(31);
  MappedObject obj = mapper.load("Question", key);
  std::int64_t running = 0;  // oracle: running sum of applied deltas
  for (int i = 0; i < 500; ++i) {
    if (rng() % 2) {
      mapper.apply_shard_method(obj, "voteUp");
      ++running;
    } else {
      mapper.apply_shard_method(obj, "voteDown");
      --running;
    }
    CHECK(obj.value("votes").get<std::int64_t>() - 76 == running);
    CHECK(obj.shard_delta("votes") == running);
  }
}

TEST_CASE("add method takes an argument") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(3));
  Key key = seed_question(store, 10, 3);
  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "addVotes", 5);
  CHECK(obj.value("votes") == 15);
  CHECK(obj.shard_delta("votes") == 5);
}

TEST_CASE("save transfers the delta into one shard and resets it") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(3));
  Key key = seed_question(store, 0, 3);

  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "voteUp");
  std::mt19937_64 rng(1);
  SaveReceipt receipt = mapper.save(obj, rng);

  CHECK(receipt.shard_written);
  REQUIRE(receipt.shard_key.has_value());
  CHECK(obj.shard_delta("votes") == 0);
  CHECK(obj.value("votes") == 1);  // aggregate untouched by save
  CHECK(store.get(*receipt.shard_key)->properties["shard_votes"] == 1);
}

TEST_CASE("save skips the shard transaction for a neutral delta") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(3));
  Key key = seed_question(store, 5, 3);

  MappedObject obj = mapper.load("Question", key);
  obj.set_plain("author", "Stan S");
  const auto log_before = store.event_log().size();
  std::mt19937_64 rng(1);
  SaveReceipt receipt = mapper.save(obj, rng);
  CHECK(receipt.main_written);
  CHECK_FALSE(receipt.shard_written);
  CHECK(store.event_log().size() == log_before + 1);  // only the main put
  CHECK(store.get(key)->properties["author"] == "Stan S");
}

TEST_CASE("save without any changes writes nothing") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(3));
  Key key = seed_question(store, 5, 3);
  MappedObject obj = mapper.load("Question", key);
  std::mt19937_64 rng(1);
  SaveReceipt receipt = mapper.save(obj, rng);
  CHECK_FALSE(receipt.main_written);
  CHECK_FALSE(receipt.shard_written);
}

TEST_CASE("a failed save keeps the delta so a retry submits it exactly once") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(1));  // single shard: easy to jam
  Key key = seed_question(store, 0, 1);

  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "voteUp");
  mapper.apply_shard_method(obj, "voteUp");

  // Occupy the shard's group so the save's transaction contends.
  Key shard_key = make_shard_keys(key, 1)[0];
  Entity shard = *store.get(shard_key);
  store.put(shard);

  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(mapper.save(obj, rng), ContentionError);
  CHECK(obj.shard_delta("votes") == 2);  // retained

  store.advance_time(store.config().commit_service_time);
  SaveReceipt receipt = mapper.save(obj, rng);
  CHECK(receipt.shard_written);
  CHECK(obj.shard_delta("votes") == 0);
  store.advance_time(store.config().query_staleness_window);
  CHECK(mapper.reload_value("Question", key, "votes") == 2);
}

TEST_CASE("save_with_retry reports an abandoned delta instead of throwing") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(1));
  Key key = seed_question(store, 0, 1);

  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "voteUp");
  Key shard_key = make_shard_keys(key, 1)[0];
  store.put(*store.get(shard_key));  // jam the group

  RetryPolicy limited;
  limited.mode = RetryPolicy::Mode::until_success;
  limited.max_attempts = 3;  // no backoff: the group stays busy
  std::mt19937_64 rng(1);
  SaveReceipt receipt = mapper.save_with_retry(obj, limited, rng);
  CHECK(receipt.delta_abandoned);
  CHECK(obj.shard_delta("votes") == 1);

  store.advance_time(store.config().commit_service_time);
  SaveReceipt retry = mapper.save_with_retry(obj, limited, rng);
  CHECK_FALSE(retry.delta_abandoned);
  CHECK(retry.shard_written);
  CHECK(mapper.reload_value("Question", key, "votes") == 1);
}

TEST_CASE("static save touches at most one shard") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(8));
  Key key = seed_question(store, 0, 8);

  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "voteUp");
  const auto log_before = store.event_log().size();
  std::mt19937_64 rng(1);
  mapper.save(obj, rng);
  CHECK(store.event_log().size() == log_before + 1);  // one shard commit
}

TEST_CASE("load-save round trip is the identity under quiescence") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(4));
  Key key = seed_question(store, 76, 4);

  std::mt19937_64 rng(2);
  MappedObject a = mapper.load("Question", key);
  mapper.save(a, rng);
  store.advance_time(store.config().query_staleness_window);
  MappedObject b = mapper.load("Question", key);
  CHECK(b.value("votes") == 76);
  CHECK(b.plain("question") == a.plain("question"));
  CHECK(b.plain("author") == a.plain("author"));
}

TEST_CASE("end-to-end: load, voteUp, save, reload grows the value by one") {
  Store store;
  Mapper mapper(store);
  mapper.register_mapping(question_def(4));
  Key key = seed_question(store, 76, 4);

  std::mt19937_64 rng(8);
  MappedObject obj = mapper.load("Question", key);
  mapper.apply_shard_method(obj, "voteUp");
  mapper.save(obj, rng);
  store.advance_time(store.config().query_staleness_window);
  CHECK(mapper.load("Question", key).value("votes") == 77);
  CHECK(mapper.reload_value("Question", key, "votes") == 77);
}

TEST_CASE("reload_value follows the visible shards") {
  Store store;
  Mapper mapper(store);
  MappingDef def = question_def(0);  // dynamic mode: query path, may be stale
  mapper.register_mapping(def);

  Key key = Key::root("Question", "42");
  Entity main{key, {{"question", "?"}, {"author", "a"}}};
  store.put(main);
  ShardSpec spec = def.shard_specs[0];
  dynamic_shard_append(store, key, 76, spec);
  store.advance_time(store.config().query_staleness_window);
  CHECK(mapper.reload_value("Question", key, "votes") == 76);

  dynamic_shard_append(store, key, 1, spec);
  dynamic_shard_append(store, key, 1, spec);
  auto stale = mapper.reload_value("Question", key, "votes").get<std::int64_t>();
  CHECK((stale == 76 || stale == 77));  // inside the staleness window
  store.advance_time(store.config().query_staleness_window);
  CHECK(mapper.reload_value("Question", key, "votes") == 78);

  CHECK_THROWS_AS(
      mapper.reload_value("Question", Key::root("Question", "404"), "votes"),
      NotFoundError);
}
