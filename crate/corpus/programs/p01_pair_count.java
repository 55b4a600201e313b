public class PairCount {
    public static int main(String[] args) {
        int[] nums = {2, 7, 11, 15, 4, 5};
        int target = 9;
        int pairs = 0;
        int checks = 0;
        for (int i = 0; i < nums.length; i++) {
            for (int j = i + 1; j < nums.length; j++) {
                checks++;
                if (nums[i] + nums[j] == target) {
                    pairs++;
                }
            }
        }
        return pairs;
    }
}
