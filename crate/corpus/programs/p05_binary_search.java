public class BinarySearch {
    public static int main(String[] args) {
        int[] sorted = {1, 3, 5, 7, 9, 11};
        int target = 9;
        int lo = 0;
        int hi = sorted.length - 1;
        int found = -1;
        while (lo <= hi) {
            int mid = (lo + hi) / 2;
            if (sorted[mid] == target) {
                found = mid;
                break;
            } else if (sorted[mid] < target) {
                lo = mid + 1;
            } else {
                hi = mid - 1;
            }
        }
        return found;
    }
}
