import datetime as dt
import math

import pytest
from hypothesis import given, strategies as st

from stockcast.errors import ContractError, RowError
from stockcast.sentiment import (NewsItem, SentimentLexicon, aggregate_daily,
                                 load_default_lexicon, load_news_jsonl,
                                 normalize_sentiment, parse_lexicon, score_text,
                                 squash)

LEX = SentimentLexicon(valences={"good": 1.9, "bad": -2.5, "great": 3.1})

# hand evaluation of the squash: 1.9 / sqrt(1.9^2 + 15)
GOOD_SCORE = 1.9 / math.sqrt(1.9 ** 2 + 15.0)


def day(n):
    return dt.date(2024, 4, n)


class TestScoreText:
    def test_no_hits_is_zero(self):
        assert score_text("the quick brown fox", LEX) == 0.0

    def test_single_positive_token(self):
        assert score_text("good", LEX) == pytest.approx(GOOD_SCORE, abs=1e-10)
        assert score_text("good", LEX) == pytest.approx(0.4404, abs=1e-4)

    def test_negation_flips_sign(self):
        assert score_text("not good", LEX) == pytest.approx(-GOOD_SCORE, abs=1e-10)

    def test_negation_window_is_three_tokens(self):
        assert score_text("not at all good", LEX) < 0          # within 3 tokens
        assert score_text("not a b c good", LEX) > 0           # out of range

    def test_adjacent_booster_amplifies(self):
        lex = SentimentLexicon(valences={"good": 1.9})
        plain = score_text("good", lex)
        boosted = score_text("very good", lex)
        dampened = score_text("slightly good", lex)
        assert boosted > plain > dampened > 0
        expected = (1.9 + 0.293) / math.sqrt((1.9 + 0.293) ** 2 + 15.0)
        assert boosted == pytest.approx(expected, abs=1e-10)

    def test_booster_on_negative_token(self):
        lex = SentimentLexicon(valences={"bad": -2.5})
        assert score_text("very bad", lex) < score_text("bad", lex) < 0

    def test_multiple_hits_sum(self):
        s = 1.9 + 3.1
        assert score_text("good and great", LEX) == pytest.approx(squash(s), abs=1e-12)

    def test_case_and_punctuation_insensitive(self):
        assert score_text("GOOD!!!", LEX) == score_text("good", LEX)

    @given(st.floats(min_value=-50, max_value=50))
    def test_squash_is_odd_and_bounded(self, s):
        assert squash(s) == pytest.approx(-squash(-s), abs=1e-15)
        assert -1.0 < squash(s) < 1.0


class TestAggregateDaily:
    def test_single_article(self):
        items = [(NewsItem(date=day(1), text="good"), 0.5)]
        daily = aggregate_daily(items, [day(1)])
        assert daily.scores == [0.5]
        assert daily.coverage == [1]

    def test_same_day_mean_cancels(self):
        items = [(NewsItem(date=day(1), text="a"), 0.4),
                 (NewsItem(date=day(1), text="b"), -0.4)]
        daily = aggregate_daily(items, [day(1)])
        assert daily.scores == [0.0]
        assert daily.coverage == [2]

    def test_carry_forward(self):
        items = [(NewsItem(date=day(1), text="a"), 0.3)]
        daily = aggregate_daily(items, [day(1), day(2), day(3)])
        assert daily.scores == [0.3, 0.3, 0.3]
        assert daily.coverage == [1, 0, 0]

    def test_zero_before_any_news(self):
        items = [(NewsItem(date=day(3), text="a"), 0.8)]
        daily = aggregate_daily(items, [day(1), day(2), day(3)])
        assert daily.scores == [0.0, 0.0, 0.8]

    def test_non_trading_day_attaches_forward(self):
        # news dated day 2, but day 2 is not in the calendar
        items = [(NewsItem(date=day(2), text="a"), 0.6)]
        daily = aggregate_daily(items, [day(1), day(3)])
        assert daily.scores == [0.0, 0.6]

    def test_news_after_calendar_dropped(self):
        items = [(NewsItem(date=day(9), text="a"), 0.6)]
        daily = aggregate_daily(items, [day(1), day(2)])
        assert daily.scores == [0.0, 0.0]

    def test_length_and_bounds_invariant(self):
        calendar = [day(i) for i in range(1, 11)]
        items = [(NewsItem(date=day(i), text="x"), ((-1) ** i) * 0.9)
                 for i in range(1, 11)]
        daily = aggregate_daily(items, calendar)
        assert len(daily.scores) == len(calendar)
        assert all(-1.0 <= s <= 1.0 for s in daily.scores)

    def test_doubling_articles_keeps_mean(self):
        items = [(NewsItem(date=day(1), text="a"), 0.2),
                 (NewsItem(date=day(1), text="b"), 0.6)]
        once = aggregate_daily(items, [day(1)])
        twice = aggregate_daily(items * 2, [day(1)])
        assert once.scores == twice.scores

    def test_empty_calendar_rejected(self):
        with pytest.raises(ContractError):
            aggregate_daily([], [])


class TestLexiconIo:
    def test_default_lexicon_loads(self):
        lex = load_default_lexicon()
        assert len(lex.valences) >= 100
        assert lex.valences["rally"] > 0 > lex.valences["crash"]

    def test_parse_rejects_duplicates_and_garbage(self):
        with pytest.raises(RowError):
            parse_lexicon("good\t1.0\ngood\t2.0")
        with pytest.raises(RowError):
            parse_lexicon("good\tnot-a-number")
        with pytest.raises(RowError):
            parse_lexicon("missing-tab-line")

    def test_normalize_sentiment_delegates_to_minmax(self):
        daily = aggregate_daily([(NewsItem(date=day(1), text="a"), -0.5),
                                 (NewsItem(date=day(2), text="b"), 0.5)],
                                [day(1), day(2)])
        norm, params = normalize_sentiment(daily)
        assert norm == [0.0, 1.0]
        assert (params.x_min, params.x_max) == (-0.5, 0.5)


class TestNewsJsonl:
    def test_load(self):
        text = ('{"date": "2024-04-01", "text": "shares rally", "source": "w"}\n'
                '{"date": "2024-04-02", "text": "stock crash"}\n')
        items = load_news_jsonl(text)
        assert len(items) == 2
        assert items[0].source == "w" and items[1].source is None

    def test_bad_record_reports_line(self):
        with pytest.raises(RowError) as exc:
            load_news_jsonl('{"date": "2024-04-01", "text": "ok"}\n{"nope": 1}\n')
        assert exc.value.line == 2

    def test_empty_text_rejected(self):
        with pytest.raises(RowError):
            load_news_jsonl('{"date": "2024-04-01", "text": "   "}\n')
