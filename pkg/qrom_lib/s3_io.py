"""
S3 result store for experiment outputs.

Experiment CSVs and their JSON sidecars can be pushed to S3-compatible
storage (MinIO locally, AWS S3 otherwise), partitioned by experiment and
config hash.
"""

import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import boto3
from botocore.exceptions import ClientError, NoCredentialsError

logger = logging.getLogger(__name__)


def parse_s3_uri(uri: str) -> Tuple[str, str]:
    """Split ``s3://bucket/prefix`` into (bucket, prefix without slashes at the ends)."""
    if not uri.startswith("s3://"):
        raise ValueError(f"Not an S3 URI: {uri}")
    bucket, _, prefix = uri[len("s3://"):].partition("/")
    if not bucket:
        raise ValueError(f"S3 URI has no bucket: {uri}")
    return bucket, prefix.strip("/")


def result_key(prefix: str, experiment: str, config_hash: str, filename: str) -> str:
    """``<prefix>/experiment=<name>/config=<hash>/<filename>``."""
    parts = [prefix] if prefix else []
    parts += [f"experiment={experiment}", f"config={config_hash}", filename]
    return "/".join(parts)


class ResultStore:
    """Uploads experiment results to S3."""

    def __init__(self, bucket: Optional[str] = None):
        self.endpoint_url = os.getenv("S3_ENDPOINT_URL")
        self.access_key = os.getenv("S3_ACCESS_KEY")
        self.secret_key = os.getenv("S3_SECRET_KEY")
        self.region = os.getenv("S3_REGION", "us-east-1")
        self.bucket = bucket or os.getenv("S3_BUCKET", "qrom-results")

        self._client = None

    @property
    def client(self):
        """S3 client, created on first use."""
        if self._client is None:
            try:
                self._client = boto3.client(
                    "s3",
                    endpoint_url=self.endpoint_url,
                    aws_access_key_id=self.access_key,
                    aws_secret_access_key=self.secret_key,
                    region_name=self.region,
                )
            except NoCredentialsError:
                logger.error("S3 credentials not found")
                raise
        return self._client

    def ensure_bucket(self, bucket_name: Optional[str] = None) -> bool:
        """
        Make sure the bucket exists, creating it when missing.

        Args:
            bucket_name: Bucket; the store's default if None.

        Returns:
            True if the bucket exists or was created.
        """
        bucket_name = bucket_name or self.bucket
        try:
            self.client.head_bucket(Bucket=bucket_name)
            logger.debug(f"Bucket {bucket_name} exists")
            return True
        except ClientError as e:
            if str(e.response["Error"]["Code"]) not in ("404", "NoSuchBucket"):
                logger.error(f"Error checking bucket {bucket_name}: {e}")
                return False
            try:
                self.client.create_bucket(Bucket=bucket_name)
                logger.info(f"Created bucket {bucket_name}")
                return True
            except ClientError as create_error:
                logger.error(f"Failed to create bucket {bucket_name}: {create_error}")
                return False

    def upload_file(self, file_path: str, s3_key: str, bucket_name: Optional[str] = None) -> bool:
        """
        Upload one local file.

        Args:
            file_path: Local file.
            s3_key: Destination key.
            bucket_name: Bucket; the store's default if None.

        Returns:
            True if the upload succeeded.
        """
        bucket_name = bucket_name or self.bucket
        if not os.path.exists(file_path):
            logger.error(f"File not found: {file_path}")
            return False
        if not self.ensure_bucket(bucket_name):
            return False
        try:
            self.client.upload_file(file_path, bucket_name, s3_key)
            logger.info(f"Uploaded {file_path} to s3://{bucket_name}/{s3_key}")
            return True
        except ClientError as e:
            logger.error(f"Failed to upload {file_path}: {e}")
            return False

    def upload_results(self, paths: List[str], experiment: str, config_hash: str,
                       prefix: str = "", bucket_name: Optional[str] = None) -> Dict[str, bool]:
        """
        Upload an experiment's files under its partition.

        Args:
            paths: Local CSV and sidecar files.
            experiment: Experiment name.
            config_hash: Short config hash.
            prefix: Key prefix inside the bucket.
            bucket_name: Bucket; the store's default if None.

        Returns:
            Destination key to upload success.
        """
        status = {}
        for path in paths:
            key = result_key(prefix, experiment, config_hash, Path(path).name)
            status[key] = self.upload_file(path, key, bucket_name)
        return status

    def download_file(self, s3_key: str, local_path: str, bucket_name: Optional[str] = None) -> bool:
        """
        Download one object.

        Returns:
            True if the download succeeded.
        """
        bucket_name = bucket_name or self.bucket
        try:
            Path(local_path).parent.mkdir(parents=True, exist_ok=True)
            self.client.download_file(bucket_name, s3_key, local_path)
            logger.info(f"Downloaded s3://{bucket_name}/{s3_key} to {local_path}")
            return True
        except ClientError as e:
            logger.error(f"Failed to download s3://{bucket_name}/{s3_key}: {e}")
            return False

    def list_results(self, experiment: Optional[str] = None, prefix: str = "",
                     bucket_name: Optional[str] = None) -> List[str]:
        """Keys under the prefix, optionally narrowed to one experiment's partition."""
        bucket_name = bucket_name or self.bucket
        key_prefix = "/".join(p for p in (prefix, f"experiment={experiment}/" if experiment else "") if p)
        try:
            response = self.client.list_objects_v2(Bucket=bucket_name, Prefix=key_prefix)
        except ClientError as e:
            logger.error(f"Failed to list objects in {bucket_name}: {e}")
            return []
        return [obj["Key"] for obj in response.get("Contents", [])]
