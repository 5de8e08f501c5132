import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alignkit.alignment import AlignmentSet
from alignkit.errors import DataFormatError
from alignkit.projection import (
    OUTSIDE_TAG,
    LabeledSentence,
    Span,
    format_labeled_line,
    parse_labeled_line,
    parse_span_file,
    project_corpus,
    project_corpus_spans,
    project_spans,
    project_token_labels,
    read_labeled,
    write_span_file,
)


def aset(links, m, n):
    return AlignmentSet(links=frozenset(links), m=m, n=n)


class TestTokenProjection:
    def test_identity_alignment_copies_tags(self):
        tags = ["B-PER", "I-PER", "O", "B-LOC"]
        alignment = aset({(j, j) for j in range(4)}, 4, 4)
        assert project_token_labels(tags, alignment) == tags

    def test_entity_tags_follow_their_words(self):
        # "Mary lives in Paris" -> "玛丽 住 在 巴黎" with a 1-1 alignment:
        # the person and location tags land on the matching positions.
        tags = ["B-PER", "O", "O", "B-LOC"]
        alignment = aset({(0, 0), (1, 1), (2, 2), (3, 3)}, 4, 4)
        assert project_token_labels(tags, alignment) == ["B-PER", "O", "O", "B-LOC"]

    def test_unaligned_targets_get_the_outside_tag(self):
        tags = ["B-PER"]
        alignment = aset({(0, 1)}, 1, 3)
        assert project_token_labels(tags, alignment) == [
            OUTSIDE_TAG,
            "B-PER",
            OUTSIDE_TAG,
        ]

    def test_majority_wins(self):
        tags = ["X", "Y", "Y"]
        alignment = aset({(0, 0), (1, 0), (2, 0)}, 3, 1)
        assert project_token_labels(tags, alignment) == ["Y"]

    def test_tie_goes_to_the_leftmost_voter(self):
        tags = ["X", "Y"]
        alignment = aset({(0, 0), (1, 0)}, 2, 1)
        assert project_token_labels(tags, alignment) == ["X"]

    def test_tie_break_only_compares_tied_tags(self):
        # Z appears first but loses the count; the tie is between nothing,
        # so the majority tag wins even though its earliest voter is later.
        tags = ["Z", "X", "X"]
        alignment = aset({(0, 0), (1, 0), (2, 0)}, 3, 1)
        assert project_token_labels(tags, alignment) == ["X"]

    def test_outside_votes_count_like_any_tag(self):
        tags = ["O", "O", "B-LOC"]
        alignment = aset({(0, 0), (1, 0), (2, 0)}, 3, 1)
        assert project_token_labels(tags, alignment) == ["O"]

    def test_tag_count_must_match_alignment(self):
        with pytest.raises(ValueError):
            project_token_labels(["X"], aset({(0, 0)}, 2, 1))

    @given(
        tags=st.lists(st.sampled_from(["B-PER", "I-PER", "O"]), min_size=1, max_size=6),
        data=st.data(),
    )
    @settings(max_examples=150, deadline=None)
    def test_permuting_target_positions_permutes_the_output(self, tags, data):
        m = len(tags)
        n = data.draw(st.integers(1, 6))
        links = data.draw(
            st.sets(st.tuples(st.integers(0, m - 1), st.integers(0, n - 1)), max_size=10)
        )
        perm = data.draw(st.permutations(range(n)))
        base = project_token_labels(tags, aset(links, m, n))
        permuted = project_token_labels(
            tags, aset({(j, perm[i]) for j, i in links}, m, n)
        )
        assert all(permuted[perm[i]] == base[i] for i in range(n))


class TestSpanProjection:
    def test_hull_of_aligned_positions(self):
        spans = [Span(0, 1, "EVENT")]
        alignment = aset({(0, 2), (1, 4)}, 2, 6)
        assert project_spans(spans, alignment) == [Span(2, 4, "EVENT")]

    def test_identity_alignment_copies_spans(self):
        spans = [Span(0, 1, "A"), Span(3, 3, "B")]
        alignment = aset({(j, j) for j in range(4)}, 4, 4)
        assert project_spans(spans, alignment) == spans

    def test_unaligned_spans_are_dropped(self):
        spans = [Span(0, 0, "A"), Span(2, 2, "B")]
        alignment = aset({(0, 0)}, 3, 3)
        assert project_spans(spans, alignment) == [Span(0, 0, "A")]

    def test_overlap_keeps_the_earlier_source_start(self):
        spans = [Span(0, 1, "A"), Span(2, 3, "B")]
        # Both spans hull onto overlapping target ranges.
        alignment = aset({(0, 0), (1, 2), (2, 1), (3, 3)}, 4, 4)
        assert project_spans(spans, alignment) == [Span(0, 2, "A")]

    def test_non_overlapping_spans_all_survive(self):
        spans = [Span(0, 0, "A"), Span(1, 1, "B")]
        alignment = aset({(0, 1), (1, 0)}, 2, 2)
        assert project_spans(spans, alignment) == [Span(0, 0, "B"), Span(1, 1, "A")]

    def test_projected_count_never_exceeds_input_count(self):
        spans = [Span(0, 0, "A"), Span(1, 2, "B"), Span(3, 3, "C")]
        alignment = aset({(0, 0), (1, 0), (2, 1), (3, 1)}, 4, 2)
        assert len(project_spans(spans, alignment)) <= len(spans)

    def test_span_beyond_the_source_is_rejected(self):
        with pytest.raises(ValueError):
            project_spans([Span(0, 5, "A")], aset({(0, 0)}, 2, 2))

    @given(data=st.data())
    @settings(max_examples=150, deadline=None)
    def test_equivariant_under_order_preserving_relabeling(self, data):
        # Renaming target positions with any strictly increasing map leaves
        # hull endpoints and overlap structure alone, so the projected
        # spans are exactly the renamed originals.
        m = data.draw(st.integers(1, 5))
        n = data.draw(st.integers(1, 5))
        big_n = data.draw(st.integers(n, 9))
        image = sorted(data.draw(
            st.sets(st.integers(0, big_n - 1), min_size=n, max_size=n)
        ))
        links = data.draw(
            st.sets(st.tuples(st.integers(0, m - 1), st.integers(0, n - 1)), max_size=8)
        )
        bounds = sorted(data.draw(st.sets(st.integers(0, m - 1), min_size=2, max_size=2))) if m > 1 else [0, 0]
        spans = [Span(bounds[0], bounds[1], "A")]
        base = project_spans(spans, aset(links, m, n))
        mapped = project_spans(
            spans, aset({(j, image[i]) for j, i in links}, m, big_n)
        )
        assert [s.label for s in mapped] == [s.label for s in base]
        assert [(image[s.start], image[s.end]) for s in base] == [
            (s.start, s.end) for s in mapped
        ]


class TestCorpusProjection:
    def test_record_count_mismatch_names_the_first_missing_record(self):
        annotated = [LabeledSentence(("a",), ("X",))] * 10
        alignments = [aset({(0, 0)}, 1, 1)] * 9
        with pytest.raises(DataFormatError, match="record 10"):
            project_corpus(annotated, alignments)

    def test_per_record_length_mismatch_names_the_record(self):
        annotated = [
            LabeledSentence(("a",), ("X",)),
            LabeledSentence(("a", "b"), ("X", "Y")),
        ]
        alignments = [aset({(0, 0)}, 1, 1), aset({(0, 0)}, 1, 1)]
        with pytest.raises(DataFormatError, match="record 2"):
            project_corpus(annotated, alignments)

    def test_projects_each_record(self):
        annotated = [
            LabeledSentence(("a", "b"), ("X", "O")),
            LabeledSentence(("c",), ("Y",)),
        ]
        alignments = [aset({(0, 1), (1, 0)}, 2, 2), aset(set(), 1, 2)]
        assert project_corpus(annotated, alignments) == [["O", "X"], ["O", "O"]]

    def test_span_corpus_wraps_errors_with_the_record(self):
        with pytest.raises(DataFormatError, match="record 1"):
            project_corpus_spans([[Span(0, 9, "A")]], [aset(set(), 1, 1)])
        with pytest.raises(DataFormatError, match="record 3"):
            project_corpus_spans([[], [], []], [aset(set(), 1, 1)] * 2)


class TestAnnotationFormat:
    def test_parse_round_trip(self):
        line = "Mary/B-PER lives/O in/O Paris/B-LOC"
        sentence = parse_labeled_line(line, 1)
        assert sentence.tokens == ("Mary", "lives", "in", "Paris")
        assert sentence.tags == ("B-PER", "O", "O", "B-LOC")
        assert format_labeled_line(sentence.tokens, sentence.tags) == line

    def test_tokens_may_contain_slashes(self):
        sentence = parse_labeled_line("km/h/UNIT", 1)
        assert sentence.tokens == ("km/h",)
        assert sentence.tags == ("UNIT",)

    def test_errors_name_the_line(self):
        with pytest.raises(DataFormatError, match="line 3"):
            parse_labeled_line("word-without-tag", 3)
        with pytest.raises(DataFormatError, match="line 2"):
            read_labeled(["ok/X", "/X"])

    def test_labeled_sentence_validates_lengths(self):
        with pytest.raises(ValueError):
            LabeledSentence(("a",), ("X", "Y"))
        with pytest.raises(ValueError):
            format_labeled_line(["a"], ["X", "Y"])


class TestSpanFileFormat:
    def test_parse_and_write_round_trip(self):
        text = "1\t0\t1\tEVENT\n1\t3\t3\tPER\n2\t0\t0\tLOC\n"
        spans = parse_span_file(io.StringIO(text))
        assert spans == {
            1: [Span(0, 1, "EVENT"), Span(3, 3, "PER")],
            2: [Span(0, 0, "LOC")],
        }
        out = io.StringIO()
        write_span_file(spans, out)
        assert out.getvalue() == text

    def test_blank_lines_are_skipped(self):
        assert parse_span_file(["", "1\t0\t0\tX", "  "]) == {1: [Span(0, 0, "X")]}

    def test_errors_name_the_line(self):
        with pytest.raises(DataFormatError, match="line 1"):
            parse_span_file(["1\t0\t0"])
        with pytest.raises(DataFormatError, match="line 2"):
            parse_span_file(["1\t0\t0\tX", "1\ta\t0\tX"])
        with pytest.raises(DataFormatError, match="line 1"):
            parse_span_file(["0\t0\t0\tX"])
        with pytest.raises(DataFormatError, match="line 1"):
            parse_span_file(["1\t2\t1\tX"])

    def test_span_validation(self):
        with pytest.raises(ValueError):
            Span(-1, 0, "X")
        with pytest.raises(ValueError):
            Span(2, 1, "X")
