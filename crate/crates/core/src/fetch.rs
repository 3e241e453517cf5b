//! Dataset download for `advrank fetch-data`.

use std::fs;
use std::io::Read as _;
use std::path::Path;
use std::process::Command;

use sha2::{Digest, Sha256};

const ML100K_URL: &str = "https://files.grouplens.org/datasets/movielens/ml-100k.zip";
const ML100K_UDATA_SHA256: &str = "06416e597f82b7342361e41163890c81036900f418ad91315590814211dca490";
const LETOR_PAGE: &str = "https://www.microsoft.com/en-us/research/project/letor-learning-rank-information-retrieval/";

fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Downloads MovieLens 100k into `root/ml-100k` and checks for MQ2008-semi.
/// Returns an error message on download or checksum failure.
pub fn fetch_data(root: &Path) -> Result<(), String> {
    let udata = root.join("ml-100k").join("u.data");
    if udata.is_file() {
        let digest = sha256_file(&udata).map_err(|e| format!("{}: {e}", udata.display()))?;
        if digest != ML100K_UDATA_SHA256 {
            return Err(format!("{}: checksum mismatch ({digest})", udata.display()));
        }
        eprintln!("ml-100k: present at {}", udata.display());
    } else {
        fetch_movielens(root, &udata)?;
        eprintln!("ml-100k: installed at {}", udata.display());
    }

    let fold = root.join("MQ2008-semi").join("Fold1");
    if fold.join("train.txt").is_file() && fold.join("test.txt").is_file() {
        eprintln!("MQ2008-semi: present at {}", fold.display());
    } else {
        eprintln!(
            "MQ2008-semi: not found. Download MQ2008-semi from the LETOR 4.0 page ({LETOR_PAGE}) \
             and extract it so that {} exists.",
            fold.join("train.txt").display()
        );
    }
    Ok(())
}

fn fetch_movielens(root: &Path, udata: &Path) -> Result<(), String> {
    let dl = root.join(".download");
    fs::create_dir_all(&dl).map_err(|e| format!("{}: {e}", dl.display()))?;
    let archive = dl.join("ml-100k.zip");
    eprintln!("downloading {ML100K_URL}");
    let status = Command::new("curl")
        .args(["-fsSL", "--retry", "3", "-o"])
        .arg(&archive)
        .arg(ML100K_URL)
        .status()
        .map_err(|e| format!("cannot run curl: {e}"))?;
    if !status.success() {
        return Err(format!("download failed: curl exited with {status}"));
    }
    let file = fs::File::open(&archive).map_err(|e| format!("{}: {e}", archive.display()))?;
    let mut zip = zip::ZipArchive::new(file).map_err(|e| format!("{}: {e}", archive.display()))?;
    let mut entry = zip
        .by_name("ml-100k/u.data")
        .map_err(|e| format!("{}: ml-100k/u.data: {e}", archive.display()))?;
    let mut bytes = Vec::new();
    entry.read_to_end(&mut bytes).map_err(|e| e.to_string())?;
    let digest = hex::encode(Sha256::digest(&bytes));
    if digest != ML100K_UDATA_SHA256 {
        return Err(format!("downloaded u.data has checksum {digest}, expected {ML100K_UDATA_SHA256}"));
    }
    let dir = udata.parent().expect("u.data has a parent");
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    fs::write(udata, bytes).map_err(|e| format!("{}: {e}", udata.display()))?;
    let _ = fs::remove_file(&archive);
    Ok(())
}
