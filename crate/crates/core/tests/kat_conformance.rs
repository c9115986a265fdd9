//! Generated response files against digests of the reference KATs.
//!
//! Kyber digests are the ones liboqs 0.13.0 ships in tests/KATs/kem/kats.json.
//! liboqs builds Dilithium with randomized signing, so its Dilithium digests do
//! not apply; those below come from the round-3.1 reference code compiled with
//! default (deterministic) signing and driven by the NIST PQCgenKAT_sign
//! program. Each digest is SHA-256 over the file without its `# name` line,
//! the blank line after it, and the final blank line.

use pqeval_core::device::{Platform, SoftwareBackend};
use pqeval_core::drbg::default_kat_entropy;
use pqeval_core::kat::{generate_kat, parse_rsp, run_kat, write_rsp, KatCase};
use pqeval_core::nist_api::{registry_lookup, Family};
use pqeval_core::par::Exec;
use sha2::{Digest, Sha256};

const ALL_CASES: [(Family, u8, &str); 6] = [
    (Family::Kyber, 1, "0435224d77cc89bf77b82aa82af254b62f25d24e18c44dcd0aa9473cde97217a"),
    (Family::Kyber, 3, "b3a12005fe1ce49f5df510aea6a56bfa4bdc2d3d706afb0361d70dc88188a2a6"),
    (Family::Kyber, 5, "b72b97eb9270d76f2c7a8a0b03022c81c879af9e247abff52405127d77dd3a46"),
    (Family::Dilithium, 2, "0de76205b3676fd714d35340bafe20f048c66c94f6f2aa1bdd9a84a0323049c9"),
    (Family::Dilithium, 3, "295cdf9801e24821099992c78876c2a97c5565f986ec1e14dc80bed32c2c3cc1"),
    (Family::Dilithium, 5, "f89fd1c3eea964d3f3d30572b2909ff58d40dd1b1eeca77d31d2b39f382b80a8"),
];

const FIRST_CASE: [(Family, u8, &str); 3] = [
    (Family::Kyber, 1, "bb0481d3325d828817900b709d23917cefbc10026fc857f098979451f67bb0ca"),
    (Family::Kyber, 3, "89e82a5bf2d4ddb2c6444e10409e6d9ca65dafbca67d1a0db2c9b54920a29172"),
    (Family::Kyber, 5, "5afcf2a568ad32d49b55105b032af1850f03f3888ff9e2a72f4059c58e968f60"),
];

fn body_digest(rsp: &str) -> String {
    let body = rsp.split_once("\n\n").unwrap().1;
    let body = body.strip_suffix('\n').unwrap();
    hex::encode(Sha256::digest(body.as_bytes()))
}

#[test]
fn first_case_matches_reference() {
    for (family, level, want) in FIRST_CASE {
        let entry = registry_lookup(family, level).unwrap();
        let file = generate_kat(entry, 1, &default_kat_entropy(), Exec::Sequential).unwrap();
        assert_eq!(body_digest(&write_rsp(&file)), want, "{}", entry.name());
    }
}

#[test]
fn hundred_cases_match_reference_and_verify() {
    let backend = SoftwareBackend::new(Platform::Vc709, Default::default()).unwrap();
    for (family, level, want) in ALL_CASES {
        let entry = registry_lookup(family, level).unwrap();
        let file = generate_kat(entry, 100, &default_kat_entropy(), Exec::default()).unwrap();
        let text = write_rsp(&file);
        assert_eq!(body_digest(&text), want, "{}", entry.name());

        let parsed = parse_rsp(&text).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(write_rsp(&parsed), text);

        let report = run_kat(&backend, entry, &parsed, Exec::default()).unwrap();
        assert_eq!(report.passed, 100, "{}", entry.name());

        let one = generate_kat(entry, 1, &default_kat_entropy(), Exec::Sequential).unwrap();
        assert_eq!(one.cases[0], file.cases[0]);
        if let KatCase::Sign(c) = &file.cases[7] {
            assert_eq!(c.mlen, 33 * 8);
        }
    }
}
