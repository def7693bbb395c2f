use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::OnceLock;

use super::dataset::{
    AttackClass, Column, ColumnData, Dataset, SharedVocab, SplitTag, Vocab, UNKNOWN_CODE,
};
use super::schema::{DatasetSchema, FeatureKind};
use crate::error::{Error, Result};

/// Version tag of the bundled attack-name grouping table.
pub const ATTACK_MAP_VERSION: &str = "v1";
const ATTACK_MAP_SOURCE: &str = include_str!("../../data/attack_classes.v1.txt");

/// The bundled attack-name to class grouping.
pub fn attack_map() -> &'static HashMap<String, AttackClass> {
    static MAP: OnceLock<HashMap<String, AttackClass>> = OnceLock::new();
    MAP.get_or_init(|| {
        ATTACK_MAP_SOURCE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (name, class) = l.split_once(',').expect("attack map line has a comma");
                let class = AttackClass::parse(class).expect("attack map class is valid");
                (name.to_string(), class)
            })
            .collect()
    })
}

pub fn classify_attack(name: &str) -> Option<AttackClass> {
    attack_map().get(name.trim_end_matches('.')).copied()
}

enum Builder {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>, Vocab),
}

/// Parses an NSL-KDD text file.
///
/// Without `vocab` the file is treated as the training split and builds its
/// own vocabularies in first-appearance order. With `vocab` (test split) the
/// supplied vocabularies are used as-is and unseen categories map to the
/// reserved unknown code.
pub fn parse_nslkdd(
    path: &Path,
    schema: &DatasetSchema,
    vocab: Option<&SharedVocab>,
) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reader(BufReader::new(file), path, schema, vocab)
}

pub fn parse_reader<R: Read>(
    reader: BufReader<R>,
    path: &Path,
    schema: &DatasetSchema,
    vocab: Option<&SharedVocab>,
) -> Result<Dataset> {
    let n_features = schema.features.len();
    let mut builders: Vec<Builder> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric => Ok(Builder::Numeric(Vec::new())),
            FeatureKind::Categorical => {
                let v = match vocab {
                    Some(shared) => shared.get(&f.name).cloned().ok_or_else(|| {
                        Error::Schema(format!("no vocabulary supplied for `{}`", f.name))
                    })?,
                    None => Vocab::new(),
                };
                Ok(Builder::Categorical(Vec::new(), v))
            }
        })
        .collect::<Result<_>>()?;
    let frozen = vocab.is_some();
    let mut raw_classes = Vec::new();
    let mut difficulty: Vec<u32> = Vec::new();
    let mut with_difficulty: Option<bool> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let has_difficulty = if fields.len() == n_features + 1 {
            false
        } else if fields.len() == n_features + 2 && schema.difficulty_column.is_some() {
            true
        } else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!(
                    "expected {} or {} fields, found {}",
                    n_features + 1,
                    n_features + 2,
                    fields.len()
                ),
            });
        };
        match with_difficulty {
            None => with_difficulty = Some(has_difficulty),
            Some(prev) if prev != has_difficulty => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("field count {} differs from earlier lines", fields.len()),
                })
            }
            Some(_) => {}
        }

        for (f, b) in fields[..n_features].iter().zip(builders.iter_mut()) {
            match b {
                Builder::Numeric(values) => {
                    let v: f64 = f.parse().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("invalid number `{f}`"),
                    })?;
                    values.push(v);
                }
                Builder::Categorical(codes, v) => {
                    let code = if frozen {
                        v.code_of(f).unwrap_or(UNKNOWN_CODE)
                    } else {
                        v.intern(f)
                    };
                    codes.push(code);
                }
            }
        }
        let name = fields[n_features];
        let class = classify_attack(name).ok_or_else(|| Error::UnknownAttack {
            path: path.to_path_buf(),
            line: line_no,
            name: name.to_string(),
        })?;
        raw_classes.push(class);
        if has_difficulty {
            let d: u32 = fields[n_features + 1].parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("invalid difficulty `{}`", fields[n_features + 1]),
            })?;
            difficulty.push(d);
        }
    }

    if raw_classes.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }

    let columns = schema
        .features
        .iter()
        .zip(builders)
        .map(|(f, b)| Column {
            name: f.name.clone(),
            data: match b {
                Builder::Numeric(values) => ColumnData::Numeric { values },
                Builder::Categorical(codes, vocab) => ColumnData::Categorical { codes, vocab },
            },
        })
        .collect();
    let split = if frozen {
        SplitTag::Test
    } else {
        SplitTag::Train
    };
    let mut ds = Dataset::new(columns, raw_classes, split)?;
    if with_difficulty == Some(true) {
        ds.difficulty = Some(difficulty);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    use crate::data::class_counts;

    fn line(
        protocol: &str,
        service: &str,
        flag: &str,
        src_bytes: f64,
        attack: &str,
        difficulty: Option<u32>,
    ) -> String {
        let mut fields = vec![
            "0".to_string(),
            protocol.into(),
            service.into(),
            flag.into(),
            src_bytes.to_string(),
        ];
        for i in 5..41 {
            fields.push(format!("{}", i as f64 / 100.0));
        }
        fields.push(attack.into());
        if let Some(d) = difficulty {
            fields.push(d.to_string());
        }
        fields.join(",")
    }

    fn write(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn three_line_fixture() {
        let f = write(&[
            line("tcp", "http", "SF", 181.0, "normal", Some(20)),
            line("udp", "private", "S0", 0.0, "neptune", Some(21)),
            line("tcp", "private", "REJ", 5.5, "guess_passwd", Some(15)),
        ]);
        let schema = DatasetSchema::nsl_kdd();
        let ds = parse_nslkdd(f.path(), &schema, None).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 41);
        assert_eq!(ds.labels, vec![0, 1, 1]);
        assert_eq!(
            ds.raw_classes,
            vec![AttackClass::Normal, AttackClass::DoS, AttackClass::R2L]
        );
        assert_eq!(ds.difficulty, Some(vec![20, 21, 15]));
        match &ds.column("protocol_type").unwrap().data {
            ColumnData::Categorical { codes, vocab } => {
                assert_eq!(codes, &vec![1, 2, 1]);
                assert_eq!(vocab.decode(2), Some("udp"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match &ds.column("service").unwrap().data {
            ColumnData::Categorical { codes, .. } => assert_eq!(codes, &vec![1, 2, 2]),
            other => panic!("unexpected {other:?}"),
        }
        match &ds.column("src_bytes").unwrap().data {
            ColumnData::Numeric { values } => assert_eq!(values, &vec![181.0, 0.0, 5.5]),
            other => panic!("unexpected {other:?}"),
        }
        match &ds.column("dst_host_srv_rerror_rate").unwrap().data {
            ColumnData::Numeric { values } => assert_eq!(values[0], 0.40),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn test_split_maps_unseen_to_unknown() {
        let schema = DatasetSchema::nsl_kdd();
        let train = write(&[line("tcp", "http", "SF", 1.0, "normal", None)]);
        let train = parse_nslkdd(train.path(), &schema, None).unwrap();
        let test = write(&[line("icmp", "http", "SF", 1.0, "smurf", None)]);
        let test = parse_nslkdd(test.path(), &schema, Some(&train.vocab())).unwrap();
        assert_eq!(test.split, SplitTag::Test);
        match &test.column("protocol_type").unwrap().data {
            ColumnData::Categorical { codes, vocab } => {
                assert_eq!(codes, &vec![UNKNOWN_CODE]);
                assert_eq!(vocab.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(class_counts(&test)[&AttackClass::DoS], 1);
    }

    #[test]
    fn empty_file_has_no_records() {
        let f = write(&[]);
        let err = parse_nslkdd(f.path(), &DatasetSchema::nsl_kdd(), None).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let mut short = line("tcp", "http", "SF", 1.0, "normal", None);
        short.truncate(short.rfind(',').unwrap());
        let f = write(&[line("tcp", "http", "SF", 1.0, "normal", None), short]);
        let err = parse_nslkdd(f.path(), &DatasetSchema::nsl_kdd(), None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_attack_is_named() {
        let f = write(&[line("tcp", "http", "SF", 1.0, "teleport", None)]);
        let err = parse_nslkdd(f.path(), &DatasetSchema::nsl_kdd(), None).unwrap_err();
        assert!(err.to_string().contains("teleport"));
    }

    #[test]
    fn attack_map_covers_every_class() {
        let map = attack_map();
        for class in AttackClass::ALL {
            assert!(map.values().any(|&c| c == class));
        }
        assert_eq!(classify_attack("smurf."), Some(AttackClass::DoS));
    }

    #[test]
    fn parse_is_deterministic_and_vocab_round_trips() {
        let lines: Vec<String> = ["http", "ftp", "smtp", "http"]
            .iter()
            .map(|s| line("tcp", s, "SF", 1.0, "normal", Some(1)))
            .collect();
        let f = write(&lines);
        let schema = DatasetSchema::nsl_kdd();
        let a = parse_nslkdd(f.path(), &schema, None).unwrap();
        let b = parse_nslkdd(f.path(), &schema, None).unwrap();
        assert_eq!(a, b);
        if let ColumnData::Categorical { codes, vocab } = &a.column("service").unwrap().data {
            let decoded: Vec<&str> = codes.iter().map(|&c| vocab.decode(c).unwrap()).collect();
            assert_eq!(decoded, vec!["http", "ftp", "smtp", "http"]);
        } else {
            panic!("service should be categorical");
        }
    }
}
