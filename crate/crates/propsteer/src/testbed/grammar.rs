//! Template grammar: `DET SUBJ VERB DET OBJ` sentences carrying three binary
//! properties (verb tense, subject number, object number).
//!
//! Every surface form is unique across the whole vocabulary, so parsing is a
//! straight lookup and every sentence has exactly one structure. Flipping a
//! property changes only the tokens that realize it: the verb form for tense,
//! the subject noun (plus verb agreement in the present tense) for subject
//! number, the object noun for object number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TestbedError;

/// The three binary properties a sentence realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    Tense,
    SubjNum,
    ObjNum,
}

impl Property {
    pub const ALL: [Property; 3] = [Property::Tense, Property::SubjNum, Property::ObjNum];

    pub fn index(self) -> usize {
        match self {
            Property::Tense => 0,
            Property::SubjNum => 1,
            Property::ObjNum => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Tense => "tense",
            Property::SubjNum => "subjnum",
            Property::ObjNum => "objnum",
        }
    }
}

impl std::str::FromStr for Property {
    type Err = TestbedError;

    fn from_str(s: &str) -> Result<Self, TestbedError> {
        match s.to_ascii_lowercase().as_str() {
            "tense" => Ok(Property::Tense),
            "subjnum" => Ok(Property::SubjNum),
            "objnum" => Ok(Property::ObjNum),
            other => Err(TestbedError::UnknownProperty(other.to_owned())),
        }
    }
}

/// Noun with singular and plural surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounEntry {
    pub singular: String,
    pub plural: String,
}

/// Verb with number-agreeing present forms and a shared past form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbEntry {
    pub present_singular: String,
    pub present_plural: String,
    pub past: String,
}

fn noun(sg: &str, pl: &str) -> NounEntry {
    NounEntry {
        singular: sg.to_owned(),
        plural: pl.to_owned(),
    }
}

fn verb(pres_sg: &str, pres_pl: &str, past: &str) -> VerbEntry {
    VerbEntry {
        present_singular: pres_sg.to_owned(),
        present_plural: pres_pl.to_owned(),
        past: past.to_owned(),
    }
}

/// Fully resolved sentence: slot choices plus the three property values.
/// Label 1 means past tense / plural number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SentenceStructure {
    pub det_subj: usize,
    pub subject: usize,
    pub verb: usize,
    pub det_obj: usize,
    pub object: usize,
    pub tense_past: bool,
    pub subj_plural: bool,
    pub obj_plural: bool,
}

impl SentenceStructure {
    pub fn label(&self, p: Property) -> bool {
        match p {
            Property::Tense => self.tense_past,
            Property::SubjNum => self.subj_plural,
            Property::ObjNum => self.obj_plural,
        }
    }

    pub fn flipped(mut self, p: Property) -> Self {
        match p {
            Property::Tense => self.tense_past = !self.tense_past,
            Property::SubjNum => self.subj_plural = !self.subj_plural,
            Property::ObjNum => self.obj_plural = !self.obj_plural,
        }
        self
    }

    /// Language-independent packing of the structure into a `u64`, used to
    /// key per-sentence randomness so that translations share it.
    pub fn key(&self) -> u64 {
        self.frame_key()
            | (self.tense_past as u64) << 20
            | (self.subj_plural as u64) << 21
            | (self.obj_plural as u64) << 22
    }

    /// Packing of the content slots only: the property variants of one frame
    /// share this key (and therefore share per-frame randomness such as the
    /// codec gain).
    pub fn frame_key(&self) -> u64 {
        (self.det_subj as u64)
            | (self.subject as u64) << 4
            | (self.verb as u64) << 8
            | (self.det_obj as u64) << 12
            | (self.object as u64) << 16
    }
}

/// A corpus sentence with its gold property labels and the three gold flips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: usize,
    pub sentence: String,
    /// Labels indexed by [`Property::index`].
    pub labels: [bool; 3],
    /// Gold-flipped sentence per property, same indexing.
    pub flips: [String; 3],
}

/// Slot inventories for one surface language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    determiners: Vec<String>,
    subjects: Vec<NounEntry>,
    verbs: Vec<VerbEntry>,
    objects: Vec<NounEntry>,
}

// Structure keys pack slot indices into 4 bits each.
const MAX_INVENTORY: usize = 16;

impl Grammar {
    pub fn new(
        determiners: Vec<String>,
        subjects: Vec<NounEntry>,
        verbs: Vec<VerbEntry>,
        objects: Vec<NounEntry>,
    ) -> Result<Self, TestbedError> {
        if determiners.is_empty() {
            return Err(TestbedError::EmptyInventory("determiners"));
        }
        if subjects.is_empty() {
            return Err(TestbedError::EmptyInventory("subjects"));
        }
        if verbs.is_empty() {
            return Err(TestbedError::EmptyInventory("verbs"));
        }
        if objects.is_empty() {
            return Err(TestbedError::EmptyInventory("objects"));
        }
        for len in [
            determiners.len(),
            subjects.len(),
            verbs.len(),
            objects.len(),
        ] {
            if len > MAX_INVENTORY {
                return Err(TestbedError::InventoryTooLarge(MAX_INVENTORY));
            }
        }
        let g = Self {
            determiners,
            subjects,
            verbs,
            objects,
        };
        // every surface form must be unique so parsing is unambiguous
        let mut seen = std::collections::HashSet::new();
        for word in g.all_surface_forms() {
            if !seen.insert(word.clone()) {
                return Err(TestbedError::AmbiguousSurfaceForm(word));
            }
        }
        Ok(g)
    }

    /// Small English fragment; the default surface language.
    pub fn english() -> Self {
        Self::new(
            vec!["the".into(), "my".into()],
            vec![
                noun("dog", "dogs"),
                noun("cat", "cats"),
                noun("bird", "birds"),
                noun("horse", "horses"),
                noun("fox", "foxes"),
            ],
            vec![
                verb("chases", "chase", "chased"),
                verb("sees", "see", "saw"),
                verb("finds", "find", "found"),
                verb("follows", "follow", "followed"),
                verb("watches", "watch", "watched"),
            ],
            vec![
                noun("ball", "balls"),
                noun("stick", "sticks"),
                noun("apple", "apples"),
                noun("worm", "worms"),
                noun("mouse", "mice"),
            ],
        )
        .expect("built-in grammar is valid")
    }

    /// Second surface language with the same slot and property structure but
    /// a disjoint vocabulary, for the cross-lingual setting.
    pub fn pseudo() -> Self {
        Self::new(
            vec!["lo".into(), "mia".into()],
            vec![
                noun("hundo", "hundoj"),
                noun("kato", "katoj"),
                noun("birdo", "birdoj"),
                noun("cevalo", "cevaloj"),
                noun("vulpo", "vulpoj"),
            ],
            vec![
                verb("pelas", "pelan", "pelis"),
                verb("vidas", "vidan", "vidis"),
                verb("trovas", "trovan", "trovis"),
                verb("sekvas", "sekvan", "sekvis"),
                verb("gardas", "gardan", "gardis"),
            ],
            vec![
                noun("pilko", "pilkoj"),
                noun("bastono", "bastonoj"),
                noun("pomo", "pomoj"),
                noun("vermo", "vermoj"),
                noun("muso", "musoj"),
            ],
        )
        .expect("built-in grammar is valid")
    }

    pub fn determiner_count(&self) -> usize {
        self.determiners.len()
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn verb_count(&self) -> usize {
        self.verbs.len()
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// Total number of distinct sentences.
    pub fn sentence_count(&self) -> usize {
        self.determiners.len()
            * self.subjects.len()
            * self.verbs.len()
            * self.determiners.len()
            * self.objects.len()
            * 8
    }

    /// True when `other` can stand in as a second surface language: identical
    /// inventory sizes (the property structure is fixed by the template).
    pub fn same_structure(&self, other: &Grammar) -> bool {
        self.determiners.len() == other.determiners.len()
            && self.subjects.len() == other.subjects.len()
            && self.verbs.len() == other.verbs.len()
            && self.objects.len() == other.objects.len()
    }

    fn all_surface_forms(&self) -> Vec<String> {
        let mut words: Vec<String> = self.determiners.clone();
        for n in self.subjects.iter().chain(&self.objects) {
            words.push(n.singular.clone());
            words.push(n.plural.clone());
        }
        for v in &self.verbs {
            words.push(v.present_singular.clone());
            words.push(v.present_plural.clone());
            words.push(v.past.clone());
        }
        words
    }

    fn verb_form(&self, s: &SentenceStructure) -> &str {
        let v = &self.verbs[s.verb];
        if s.tense_past {
            &v.past
        } else if s.subj_plural {
            &v.present_plural
        } else {
            &v.present_singular
        }
    }

    /// Surface string for a structure.
    pub fn realize(&self, s: &SentenceStructure) -> String {
        let subj = &self.subjects[s.subject];
        let obj = &self.objects[s.object];
        format!(
            "{} {} {} {} {}",
            self.determiners[s.det_subj],
            if s.subj_plural {
                &subj.plural
            } else {
                &subj.singular
            },
            self.verb_form(s),
            self.determiners[s.det_obj],
            if s.obj_plural {
                &obj.plural
            } else {
                &obj.singular
            },
        )
    }

    /// Recovers the unique structure of an in-grammar sentence.
    pub fn parse(&self, sentence: &str) -> Result<SentenceStructure, TestbedError> {
        let tokens = crate::reward::tokenize(sentence);
        if tokens.len() != 5 {
            return Err(TestbedError::OutOfGrammar(format!(
                "expected 5 tokens, got {} in {sentence:?}",
                tokens.len()
            )));
        }
        let det_subj = self.lookup_det(&tokens[0])?;
        let (subject, subj_plural) = self.lookup_noun(&self.subjects, &tokens[1])?;
        let (verb_idx, tense_past, verb_number) = self.lookup_verb(&tokens[2])?;
        if let Some(plural) = verb_number {
            if plural != subj_plural {
                return Err(TestbedError::OutOfGrammar(format!(
                    "verb {:?} does not agree with subject {:?}",
                    tokens[2], tokens[1]
                )));
            }
        }
        let det_obj = self.lookup_det(&tokens[3])?;
        let (object, obj_plural) = self.lookup_noun(&self.objects, &tokens[4])?;
        Ok(SentenceStructure {
            det_subj,
            subject,
            verb: verb_idx,
            det_obj,
            object,
            tense_past,
            subj_plural,
            obj_plural,
        })
    }

    fn lookup_det(&self, token: &str) -> Result<usize, TestbedError> {
        self.determiners
            .iter()
            .position(|d| d == token)
            .ok_or_else(|| TestbedError::OutOfGrammar(format!("unknown determiner {token:?}")))
    }

    fn lookup_noun(
        &self,
        inventory: &[NounEntry],
        token: &str,
    ) -> Result<(usize, bool), TestbedError> {
        for (i, n) in inventory.iter().enumerate() {
            if n.singular == token {
                return Ok((i, false));
            }
            if n.plural == token {
                return Ok((i, true));
            }
        }
        Err(TestbedError::OutOfGrammar(format!(
            "unknown noun {token:?}"
        )))
    }

    /// Returns (index, is_past, present-form number if applicable).
    fn lookup_verb(&self, token: &str) -> Result<(usize, bool, Option<bool>), TestbedError> {
        for (i, v) in self.verbs.iter().enumerate() {
            if v.past == token {
                return Ok((i, true, None));
            }
            if v.present_singular == token {
                return Ok((i, false, Some(false)));
            }
            if v.present_plural == token {
                return Ok((i, false, Some(true)));
            }
        }
        Err(TestbedError::OutOfGrammar(format!(
            "unknown verb {token:?}"
        )))
    }

    /// The gold label of `sentence` under property `p`; the oracle the
    /// evaluation uses in place of human judges.
    pub fn label_of(&self, sentence: &str, p: Property) -> Result<bool, TestbedError> {
        Ok(self.parse(sentence)?.label(p))
    }

    /// The unique in-grammar sentence differing from `sentence` only in
    /// property `p`. An involution: flipping twice returns the original.
    pub fn gold_flip(&self, sentence: &str, p: Property) -> Result<String, TestbedError> {
        Ok(self.realize(&self.parse(sentence)?.flipped(p)))
    }

    /// Every structure in the grammar, in deterministic order.
    pub fn enumerate(&self) -> Vec<SentenceStructure> {
        let mut out = Vec::with_capacity(self.sentence_count());
        for det_subj in 0..self.determiners.len() {
            for subject in 0..self.subjects.len() {
                for verb in 0..self.verbs.len() {
                    for det_obj in 0..self.determiners.len() {
                        for object in 0..self.objects.len() {
                            for bits in 0..8u8 {
                                out.push(SentenceStructure {
                                    det_subj,
                                    subject,
                                    verb,
                                    det_obj,
                                    object,
                                    tense_past: bits & 1 != 0,
                                    subj_plural: bits & 2 != 0,
                                    obj_plural: bits & 4 != 0,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Uniform seeded sample of `count` sentences, each with its three gold
    /// labels and three gold flips.
    pub fn generate_corpus(
        &self,
        count: usize,
        seed: u64,
    ) -> Result<Vec<CorpusRecord>, TestbedError> {
        if count == 0 {
            return Err(TestbedError::EmptyCorpusRequest);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for id in 0..count {
            let s = SentenceStructure {
                det_subj: rng.random_range(0..self.determiners.len()),
                subject: rng.random_range(0..self.subjects.len()),
                verb: rng.random_range(0..self.verbs.len()),
                det_obj: rng.random_range(0..self.determiners.len()),
                object: rng.random_range(0..self.objects.len()),
                tense_past: rng.random(),
                subj_plural: rng.random(),
                obj_plural: rng.random(),
            };
            out.push(CorpusRecord {
                id,
                sentence: self.realize(&s),
                labels: [s.tense_past, s.subj_plural, s.obj_plural],
                flips: [
                    self.realize(&s.flipped(Property::Tense)),
                    self.realize(&s.flipped(Property::SubjNum)),
                    self.realize(&s.flipped(Property::ObjNum)),
                ],
            });
        }
        Ok(out)
    }
}
