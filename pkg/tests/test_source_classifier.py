import pytest
from hypothesis import given, strategies as st

from geostream.geo import RegionClass
from geostream.source_classifier import (
    Blacklist,
    BlacklistEntry,
    BlacklistError,
    Category,
    GenericClient,
    Noise,
    ThirdParty,
    classify_source,
    extract_source_name,
    load_blacklist,
    noise_report,
    parse_blacklist,
    platform_report,
    remove_noise,
)

from conftest import make_tweet

SD = load_blacklist("san-diego-2015-11")


def anchor(name):
    return f'<a href="http://example.com" rel="nofollow">{name}</a>'


class TestExtract:
    @pytest.mark.parametrize("raw, name", [
        ('<a href="http://instagram.com" rel="nofollow">Instagram</a>', "Instagram"),
        ("Twitter for iPhone", "Twitter for iPhone"),
        ('<a href="x">A &amp; B</a>', "A & B"),
        ('<a href="x">  padded  </a>', "padded"),
        ('<a href="x">&lt;b&gt; &quot;q&quot;</a>', '<b> "q"'),
        ("  <a href='x'>broken", "<a href='x'>broken"),
        ("", ""),
    ])
    def test_examples(self, raw, name):
        assert extract_source_name(raw) == name


class TestClassify:
    def test_job_bot(self):
        assert classify_source(make_tweet(source="TweetMyJOBS"), SD) == Noise(Category.JOB)

    def test_hashtag_condition(self):
        with_tag = make_tweet(source=anchor("sp_california"), tags=["Coupon"])
        lower_tag = make_tweet(source=anchor("sp_california"), tags=["coupon"])
        no_tag = make_tweet(source=anchor("sp_california"))
        assert classify_source(with_tag, SD) == Noise(Category.ADVERTISEMENT)
        assert classify_source(lower_tag, SD) == Noise(Category.ADVERTISEMENT)
        assert classify_source(no_tag, SD) == ThirdParty("sp_california")

    def test_third_party_and_generic(self):
        assert classify_source(make_tweet(source="Instagram"), SD) == ThirdParty("Instagram")
        assert classify_source(make_tweet(source=anchor("Twitter for Android")), SD) == GenericClient()

    def test_exact_case_sensitive(self):
        assert classify_source(make_tweet(source="tweetmyjobs"), SD) == ThirdParty("tweetmyjobs")
        assert classify_source(make_tweet(source="TweetMyJOBS2"), SD) == ThirdParty("TweetMyJOBS2")

    def test_first_match_wins(self):
        bl = Blacklist([
            BlacklistEntry(Category.NEWS, "Feed", "breaking"),
            BlacklistEntry(Category.ADVERTISEMENT, "Feed"),
        ])
        assert classify_source(make_tweet(source="Feed", tags=["Breaking"]), bl) == Noise(Category.NEWS)
        assert classify_source(make_tweet(source="Feed"), bl) == Noise(Category.ADVERTISEMENT)

    def test_generic_set_configurable(self):
        bl = Blacklist(generic_clients=frozenset({"Twitter for iPhone"}))
        assert classify_source(make_tweet(source="Twitter Web Client"), bl) == ThirdParty("Twitter Web Client")


class TestLoad:
    def test_presets(self):
        assert len(SD) == 20 and len(SD.categories()) == 6
        cmh = load_blacklist("columbus.csv")
        assert len(cmh) == 20 and Category.EARTHQUAKE not in cmh.categories()

    def test_duplicate_key(self):
        with pytest.raises(BlacklistError):
            parse_blacklist("category,source_name,required_hashtag\nJob,A,\nNews,A,\n")

    def test_hashtag_distinguishes_keys(self):
        bl = parse_blacklist("category,source_name,required_hashtag\nJob,A,\nJob,A,#x\n")
        assert [e.required_hashtag for e in bl] == [None, "x"]

    @pytest.mark.parametrize("body", ["Spam,A,\n", "Job,,\n", "Job, ,\n"])
    def test_invalid_rows(self, body):
        with pytest.raises(BlacklistError):
            parse_blacklist("category,source_name,required_hashtag\n" + body)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        bl = load_blacklist(p)
        assert len(bl) == 0
        assert classify_source(make_tweet(source="TweetMyJOBS"), bl) == ThirdParty("TweetMyJOBS")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_blacklist(tmp_path / "nope.csv")

    def test_csv_round_trip(self):
        assert list(parse_blacklist(SD.to_csv())) == list(SD)


def _in_target(gen):
    return [t for t, c in zip(gen.tweets, gen.labels) if c is RegionClass.IN_TARGET]


class TestReports:
    def test_columbus_noise(self, cmh_generated):
        rep = noise_report(_in_target(cmh_generated), load_blacklist("columbus-2015-11"))
        assert rep.corpus_size == 53291
        assert rep.noise_percent == "53.47%"
        assert rep.category_percent(Category.JOB) == "43.23%"
        assert rep.category_counts()[Category.ADVERTISEMENT] == 1934

    def test_sd_rows_transcribed(self, sd_generated):
        rep = noise_report(_in_target(sd_generated), SD)
        counts = {(e.source_name, e.required_hashtag): n for e, n in rep.entry_counts.items()}
        assert counts[("TweetMyJOBS", None)] == 16005
        assert counts[("sp_california", "Coupon")] == 41
        assert counts[("Earthquake", "Earthquake")] == 762
        assert rep.category_percent(Category.JOB) == "21.17%"
        assert rep.category_percent(Category.WEATHER) == "2.18%"

    def test_zero_hits(self):
        rep = noise_report([make_tweet(source="Instagram")], SD)
        assert rep.noise_percent == "0.00%"
        assert noise_report([], SD).noise_percent == "–"

    def test_markdown_layout(self, cmh_generated):
        md = noise_report(_in_target(cmh_generated), load_blacklist("columbus-2015-11")).to_markdown()
        lines = md.splitlines()
        assert lines[0] == "| Source category | Source name | Hashtag | Tweet number | Percentage |"
        assert "| Job | TweetMyJOBS |  | 16789 | |" in lines
        assert "| Total | | | 23039 | 43.23% |" in lines
        assert "| Advertisement | dlvr.it |  | 1642 | |" in lines
        assert lines[-1] == "| | | Percentage of Noise: | | 53.47% |"

    def test_platform_rank_one(self, sd_generated, cmh_generated):
        sd = platform_report(_in_target(sd_generated), SD)
        assert (sd.rows[0].source_name, sd.rows[0].count, sd.rows[0].kind) == ("Instagram", 46484, "ThirdParty")
        assert sd.to_dict()["platforms"][0]["percent"] == "47.46%"
        cmh = platform_report(_in_target(cmh_generated), load_blacklist("columbus-2015-11"))
        assert cmh.rows[0].kind == "Noise" and cmh.rows[0].category == "Job"

    def test_platform_single(self):
        rep = platform_report([make_tweet(source="Path")], SD)
        assert [(r.source_name, r.count, r.color) for r in rep.rows] == [("Path", 1, "blue")]

    def test_platform_ties_by_name(self):
        corpus = [make_tweet(id=i, source=s) for i, s in enumerate(["b", "a", "c", "c"])]
        assert [r.source_name for r in platform_report(corpus, SD).rows] == ["c", "a", "b"]


names = st.sampled_from(["TweetMyJOBS", "sp_california", "Instagram", "dlvr.it", "Twitter for iPhone", "x"])
corpora = st.lists(st.tuples(names, st.lists(st.sampled_from(["Coupon", "coupon", "deal"]), max_size=2)),
                   max_size=40).map(lambda rows: [make_tweet(id=i, source=s, tags=t)
                                                  for i, (s, t) in enumerate(rows)])


@given(corpora)
def test_filter_complement_and_idempotence(corpus):
    kept, removed = remove_noise(corpus, SD)
    assert len(kept) + removed == len(corpus)
    assert noise_report(corpus, SD).noise_tweets == removed
    assert remove_noise(kept, SD) == (kept, 0)


@given(corpora, st.permutations(list(range(6))))
def test_order_independent(corpus, _perm):
    shuffled = corpus[::-1]
    assert noise_report(corpus, SD).entry_counts == noise_report(shuffled, SD).entry_counts


@given(corpora, names, st.sampled_from(list(Category)))
def test_monotone_in_blacklist(corpus, name, cat):
    base = noise_report(corpus, SD).noise_tweets
    try:
        bigger = SD.with_entry(BlacklistEntry(cat, name))
    except BlacklistError:
        return
    assert noise_report(corpus, bigger).noise_tweets >= base


@given(corpora)
def test_classification_total(corpus):
    for t in corpus:
        assert isinstance(classify_source(t, SD), (Noise, GenericClient, ThirdParty))
