from neural_tagger.tokenizer import (
    MASK,
    MASKREF,
    PAD,
    TAGSEP,
    SubwordTokenizer,
    tag_pieces,
    words_of,
)


def build_small():
    return SubwordTokenizer.build(
        texts=["grub rescue prompt shows", "wifi drops after suspend"],
        tags=["boot", "grub2", "visa-refusals", "dual-boot"],
    )


class TestTagPieces:
    def test_hyphen_stays_with_following_piece(self):
        assert tag_pieces("visa-refusals") == ["visa", "-refusals"]

    def test_single_word(self):
        assert tag_pieces("boot") == ["boot"]

    def test_three_pieces(self):
        assert tag_pieces("a-b-c") == ["a", "-b", "-c"]


class TestBuild:
    def test_specials_first(self):
        t = build_small()
        assert t.id_to_token[:4] == [PAD, MASK, MASKREF, TAGSEP]

    def test_deterministic(self):
        a = build_small()
        b = build_small()
        assert a.id_to_token == b.id_to_token

    def test_tag_pieces_in_vocab(self):
        t = build_small()
        for piece in ("visa", "-refusals", "grub2", "dual", "-boot"):
            assert piece in t.token_to_id


class TestEncoding:
    def test_tag_concatenation_reproduces_tag(self):
        t = build_small()
        for tag in ("boot", "grub2", "visa-refusals", "dual-boot"):
            assert t.decode(t.encode_tag(tag)) == tag

    def test_greedy_longest_match(self):
        t = SubwordTokenizer.build(texts=["abc ab a"], tags=[])
        assert [t.id_to_token[i] for i in t.encode_word("abc")] == ["abc"]
        assert [t.id_to_token[i] for i in t.encode_word("abab")] == ["ab", "ab"]

    def test_unknown_word_falls_back_to_characters(self):
        t = build_small()
        tokens = [t.id_to_token[i] for i in t.encode_word("spam")]
        assert "".join(tokens) == "spam"
        assert all(len(tok) == 1 for tok in tokens)

    def test_words_of_splits_punctuation(self):
        assert words_of("Can't boot!") == ["can", "'", "t", "boot", "!"]


class TestTokenKinds:
    def test_tagsep_is_sep(self):
        t = build_small()
        assert t.token_kind(t.tagsep_id) == "sep"

    def test_word_piece_is_tag(self):
        t = build_small()
        assert t.token_kind(t.token_to_id["boot"]) == "tag"

    def test_punctuation_char(self):
        t = SubwordTokenizer.build(texts=["what ?!"], tags=[])
        assert t.token_kind(t.token_to_id["?"]) == "punct"

    def test_non_boundary_specials_are_punct(self):
        t = build_small()
        assert t.token_kind(t.mask_id) == "punct"
        assert t.token_kind(t.maskref_id) == "punct"


def test_payload_round_trip():
    t = build_small()
    clone = SubwordTokenizer.from_payload(t.to_payload())
    assert clone.id_to_token == t.id_to_token
