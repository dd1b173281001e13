"""
Unit tests for the S3 result store.
"""

import os
from unittest.mock import Mock, patch

import pytest
from botocore.exceptions import ClientError

from qrom_lib.s3_io import ResultStore, parse_s3_uri, result_key


class TestKeys:
    """Test class for URI parsing and result partitioning."""

    def test_parse_uri(self):
        assert parse_s3_uri("s3://lab/runs/2026/") == ("lab", "runs/2026")
        assert parse_s3_uri("s3://lab") == ("lab", "")

    @pytest.mark.parametrize("uri", ["results/local", "s3://", "s3:///prefix"])
    def test_invalid_uri(self, uri):
        with pytest.raises(ValueError):
            parse_s3_uri(uri)

    def test_result_key(self):
        assert result_key("runs", "altmeas-sweep", "abc123", "altmeas-sweep.csv") == (
            "runs/experiment=altmeas-sweep/config=abc123/altmeas-sweep.csv"
        )
        assert result_key("", "yz-counting", "f00", "yz-counting.json") == (
            "experiment=yz-counting/config=f00/yz-counting.json"
        )


class TestResultStore:
    """Test class for ResultStore."""

    def setup_method(self):
        """Set up test fixtures before each test method."""
        with patch.dict(os.environ, {
            'S3_ENDPOINT_URL': 'http://localhost:9000',
            'S3_ACCESS_KEY': 'test_key',
            'S3_SECRET_KEY': 'test_secret',
            'S3_REGION': 'us-east-1',
            'S3_BUCKET': 'test-bucket'
        }):
            self.store = ResultStore()

    def test_bucket_argument_wins(self):
        assert ResultStore("other").bucket == "other"

    @patch('qrom_lib.s3_io.boto3.client')
    def test_client_creation(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client

        assert self.store.client == mock_client
        assert self.store.client == mock_client
        mock_boto3_client.assert_called_once_with(
            's3',
            endpoint_url='http://localhost:9000',
            aws_access_key_id='test_key',
            aws_secret_access_key='test_secret',
            region_name='us-east-1'
        )

    @patch('qrom_lib.s3_io.boto3.client')
    def test_ensure_bucket_exists(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.head_bucket.return_value = {}

        assert self.store.ensure_bucket() is True
        mock_client.head_bucket.assert_called_once_with(Bucket='test-bucket')
        mock_client.create_bucket.assert_not_called()

    @patch('qrom_lib.s3_io.boto3.client')
    def test_ensure_bucket_create(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.head_bucket.side_effect = ClientError({'Error': {'Code': '404'}}, 'HeadBucket')

        assert self.store.ensure_bucket('test-bucket') is True
        mock_client.create_bucket.assert_called_once_with(Bucket='test-bucket')

    @patch('qrom_lib.s3_io.boto3.client')
    def test_ensure_bucket_forbidden(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.head_bucket.side_effect = ClientError({'Error': {'Code': '403'}}, 'HeadBucket')

        assert self.store.ensure_bucket() is False
        mock_client.create_bucket.assert_not_called()

    @patch('qrom_lib.s3_io.boto3.client')
    def test_upload_file_success(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.head_bucket.return_value = {}

        with patch('os.path.exists', return_value=True):
            result = self.store.upload_file('owf.csv', 'runs/owf.csv')

        assert result is True
        mock_client.upload_file.assert_called_once_with('owf.csv', 'test-bucket', 'runs/owf.csv')

    @patch('qrom_lib.s3_io.boto3.client')
    def test_upload_file_not_found(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client

        with patch('os.path.exists', return_value=False):
            result = self.store.upload_file('nonexistent.csv', 'test-key')

        assert result is False
        mock_client.upload_file.assert_not_called()

    @patch('qrom_lib.s3_io.boto3.client')
    def test_upload_results(self, mock_boto3_client, tmp_path):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.head_bucket.return_value = {}
        csv_path = tmp_path / "bound-calculator.csv"
        json_path = tmp_path / "bound-calculator.json"
        csv_path.write_text("value\n0.046875\n")
        json_path.write_text("{}")

        status = self.store.upload_results([str(csv_path), str(json_path)], "bound-calculator",
                                           "abc123", "runs")

        assert status == {
            "runs/experiment=bound-calculator/config=abc123/bound-calculator.csv": True,
            "runs/experiment=bound-calculator/config=abc123/bound-calculator.json": True,
        }
        assert mock_client.upload_file.call_count == 2

    @patch('qrom_lib.s3_io.boto3.client')
    def test_upload_client_error(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.head_bucket.return_value = {}
        mock_client.upload_file.side_effect = ClientError({'Error': {'Code': '500'}}, 'PutObject')

        with patch('os.path.exists', return_value=True):
            assert self.store.upload_file('owf.csv', 'k') is False

    @patch('qrom_lib.s3_io.boto3.client')
    def test_download_file_success(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client

        with patch('pathlib.Path.mkdir'):
            result = self.store.download_file('runs/owf.csv', 'local/owf.csv')

        assert result is True
        mock_client.download_file.assert_called_once_with('test-bucket', 'runs/owf.csv', 'local/owf.csv')

    @patch('qrom_lib.s3_io.boto3.client')
    def test_list_results(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.list_objects_v2.return_value = {
            'Contents': [
                {'Key': 'runs/experiment=owf/config=a/owf.csv'},
                {'Key': 'runs/experiment=owf/config=a/owf.json'}
            ]
        }

        result = self.store.list_results('owf', prefix='runs')

        assert len(result) == 2
        mock_client.list_objects_v2.assert_called_once_with(
            Bucket='test-bucket',
            Prefix='runs/experiment=owf/'
        )

    @patch('qrom_lib.s3_io.boto3.client')
    def test_list_results_empty(self, mock_boto3_client):
        mock_client = Mock()
        mock_boto3_client.return_value = mock_client
        mock_client.list_objects_v2.return_value = {}

        assert self.store.list_results() == []
        mock_client.list_objects_v2.assert_called_once_with(Bucket='test-bucket', Prefix='')
