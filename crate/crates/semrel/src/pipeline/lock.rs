//! One pipeline instance per output directory, enforced by a lock file.

use std::path::{Path, PathBuf};

const LOCK_NAME: &str = ".semrel.lock";

/// Held while a phase runs; the lock file is removed on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(output_dir: &Path) -> std::io::Result<DirLock> {
        std::fs::create_dir_all(output_dir)?;
        let path = output_dir.join(LOCK_NAME);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                use std::io::Write;
                let _ = writeln!(file, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(std::io::Error::new(
                std::io::ErrorKind::WouldBlock,
                format!(
                    "output directory is locked by another pipeline instance \
                         (remove {} if that run is dead)",
                    path.display()
                ),
            )),
            Err(e) => Err(e),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
